#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "digirap/error.hpp"
#include "digirap/pulses.hpp"

namespace digirap {

/// One weak subpulse of a train: constant carrier detuning, envelope
/// centred on peak_time.
struct Subpulse {
  double peak_rabi = 0.0;
  double detuning = 0.0;
  double peak_time = 0.0;
  double duration = 1.0;
  EnvelopeShape envelope = EnvelopeShape::blackman();

  double area() const { return peak_rabi * duration * envelope.shape_factor(); }
  double start() const { return peak_time - 0.5 * duration; }
  double end() const { return peak_time + 0.5 * duration; }

  double rabi(double t) const {
    return peak_rabi * envelope_value(envelope, t - start(), duration);
  }
};

/// Per-subpulse first-order Magnus quantities.
struct SubpulseIntegrals {
  double area = 0.0;            // A_k
  double phase = 0.0;           // phi_k = T delta_k
  double effective_area = 0.0;  // sqrt(A_k^2 + phi_k^2)
};

inline SubpulseIntegrals subpulse_integrals(const Subpulse& sp, double period) {
  SubpulseIntegrals si;
  si.area = sp.area();
  si.phase = period * sp.detuning;
  si.effective_area = std::hypot(si.area, si.phase);
  return si;
}

/// Uniform sampling of a continuous pulse at t_k = k * step, k = 0..count-1.
struct SourceSampling {
  ContinuousPulse pulse;
  double step = 0.0;
  std::size_t count = 0;

  double time(std::size_t k) const { return static_cast<double>(k) * step; }
};

enum class TrainRegime { Matched, Scaled, ConstantFrequency, Custom };

/// An immutable train of N equally spaced, identically shaped subpulses.
///
/// `period` is T = r1 * tau, the time over which a subpulse's detuning
/// accumulates the phase phi_k = T delta_k. `spacing` is the peak-to-peak
/// distance. They coincide except in the duration-matched regime, where the
/// train fills the source duration and spacing = T + tau.
///
/// The carrier is phase continuous: inside subpulse k its phase is
/// theta(t) = delta_k t + c_k, with the offsets c_k chosen so the phase
/// advances by (delta_k + delta_{k+1}) * spacing / 2 between consecutive
/// peaks. For a constant-frequency train c_k = 0 and the carrier phase is
/// referenced to absolute time, so the comb teeth sit at multiples of
/// 2 pi / spacing.
class PulseTrain {
 public:
  PulseTrain(std::vector<Subpulse> subpulses, double period, TrainRegime regime = TrainRegime::Custom,
             std::optional<SourceSampling> source = std::nullopt)
      : subpulses_(std::move(subpulses)), period_(period), regime_(regime), source_(std::move(source)) {
    detail::require(subpulses_.size() >= 2, "a pulse train needs at least two subpulses");
    const Subpulse& first = subpulses_.front();
    detail::require(first.duration > 0.0, "subpulse duration must be positive");
    for (const auto& sp : subpulses_) {
      detail::require(sp.duration == first.duration && sp.envelope == first.envelope,
                      "all subpulses must share duration and envelope");
      detail::require(std::isfinite(sp.peak_rabi) && sp.peak_rabi >= 0.0,
                      "subpulse peak Rabi frequency must be non-negative");
      detail::require(std::isfinite(sp.detuning) && std::isfinite(sp.peak_time),
                      "subpulse detuning and peak time must be finite");
    }
    spacing_ = subpulses_[1].peak_time - subpulses_[0].peak_time;
    for (std::size_t k = 1; k < subpulses_.size(); ++k) {
      const double gap = subpulses_[k].peak_time - subpulses_[k - 1].peak_time;
      detail::require(std::abs(gap - spacing_) <= 1e-12 * std::max(1.0, std::abs(spacing_)),
                      "subpulse peak times must be uniformly spaced");
    }
    // r1 = 1 puts subpulses edge to edge; allow rounding in the peak times
    const double touch = first.duration * (1.0 - 1e-12);
    detail::require(period_ >= touch, "subpulses overlap: r1 must be >= 1");
    detail::require(spacing_ >= touch, "subpulses overlap: spacing below duration");
    if (source_) {
      detail::require(source_->count == subpulses_.size(),
                      "source sampling count differs from subpulse count");
    }

    offsets_.assign(subpulses_.size(), 0.0);
    for (std::size_t k = 0; k + 1 < subpulses_.size(); ++k) {
      const double step = subpulses_[k + 1].detuning - subpulses_[k].detuning;
      offsets_[k + 1] = offsets_[k] - step * (subpulses_[k].peak_time + 0.5 * spacing_);
    }
  }

  std::span<const Subpulse> subpulses() const { return subpulses_; }
  const Subpulse& operator[](std::size_t k) const { return subpulses_[k]; }
  std::size_t size() const { return subpulses_.size(); }

  double period() const { return period_; }
  double spacing() const { return spacing_; }
  double subpulse_duration() const { return subpulses_.front().duration; }
  const EnvelopeShape& envelope() const { return subpulses_.front().envelope; }
  double r1() const { return period_ / subpulse_duration(); }

  /// Ratio of the source duration to the accumulated subpulse duration; 0
  /// when the train has no source.
  double r2() const {
    if (!source_) return 0.0;
    return source_->pulse.duration / (static_cast<double>(size()) * subpulse_duration());
  }

  TrainRegime regime() const { return regime_; }
  const std::optional<SourceSampling>& source() const { return source_; }

  double start_time() const { return subpulses_.front().start(); }
  double end_time() const { return subpulses_.back().end(); }

  /// Carrier phase at time t within subpulse k.
  double carrier_phase(std::size_t k, double t) const {
    return subpulses_[k].detuning * t + offsets_[k];
  }
  double carrier_phase_at_peak(std::size_t k) const {
    return carrier_phase(k, subpulses_[k].peak_time);
  }

  bool constant_amplitude() const {
    for (const auto& sp : subpulses_) {
      if (sp.peak_rabi != subpulses_.front().peak_rabi) return false;
    }
    return true;
  }

  bool constant_frequency() const {
    for (const auto& sp : subpulses_) {
      if (sp.detuning != subpulses_.front().detuning) return false;
    }
    return true;
  }

  /// Same train with every peak Rabi frequency multiplied by kappa.
  PulseTrain scaled(double kappa) const {
    detail::require(kappa >= 0.0, "amplitude scale must be non-negative");
    auto copy = subpulses_;
    for (auto& sp : copy) sp.peak_rabi *= kappa;
    return PulseTrain(std::move(copy), period_, regime_, source_);
  }

  /// Same train with every subpulse carrier detuned by `detuning`.
  PulseTrain with_detuning(double detuning) const {
    auto copy = subpulses_;
    for (auto& sp : copy) sp.detuning = detuning;
    return PulseTrain(std::move(copy), period_, TrainRegime::ConstantFrequency, source_);
  }

 private:
  std::vector<Subpulse> subpulses_;
  double period_;
  double spacing_ = 0.0;
  TrainRegime regime_;
  std::optional<SourceSampling> source_;
  std::vector<double> offsets_;
};

namespace detail {

inline void check_train_request(std::size_t n, double r1) {
  require(n >= 2, "number of subpulses must be at least 2");
  require(std::isfinite(r1) && r1 >= 1.0, "subpulses overlap: r1 must be >= 1");
}

}  // namespace detail

/// Duration-matched digitization: the train spans the source pulse,
/// tau~ = (T + tau)(N - 1), and subpulse k peaks at the sample time
/// t_k = k tau~ / (N - 1).
inline PulseTrain digitize_matched(const ContinuousPulse& source, std::size_t n, double r1,
                                   const EnvelopeShape& envelope = EnvelopeShape::blackman()) {
  detail::check_train_request(n, r1);
  source.validate();
  const double step = source.duration / static_cast<double>(n - 1);
  const double tau = step / (1.0 + r1);
  const double s0 = envelope.shape_factor();

  std::vector<Subpulse> subpulses(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    auto& sp = subpulses[k];
    sp.peak_time = t;
    sp.duration = tau;
    sp.envelope = envelope;
    sp.peak_rabi = continuous_rabi(source, t) * (1.0 + r1) / s0;
    sp.detuning = continuous_detuning(source, t) * (1.0 + 1.0 / r1);
  }
  return PulseTrain(std::move(subpulses), r1 * tau, TrainRegime::Matched,
                    SourceSampling{source, step, n});
}

/// Time-scaled digitization with r2 = tau~ / (N tau). Subpulses repeat with
/// period T = r1 tau starting at t0 (default tau / 2); the source is sampled
/// at t~_k = k tau~ / (N - 1). The amplitude and detuning prefactors carry
/// the exact factor N / (N - 1), so the area and phase matching conditions
/// hold identically.
inline PulseTrain digitize_scaled(const ContinuousPulse& source, std::size_t n, double r1,
                                  double r2,
                                  const EnvelopeShape& envelope = EnvelopeShape::blackman(),
                                  std::optional<double> t0 = std::nullopt) {
  detail::check_train_request(n, r1);
  detail::require(std::isfinite(r2) && r2 > 0.0, "r2 must be positive");
  source.validate();
  const double nn = static_cast<double>(n);
  const double tau = source.duration / (nn * r2);
  const double period = r1 * tau;
  const double step = source.duration / (nn - 1.0);
  const double exact = nn / (nn - 1.0);
  const double s0 = envelope.shape_factor();
  const double first = t0.value_or(0.5 * tau);

  std::vector<Subpulse> subpulses(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ts = static_cast<double>(k) * step;
    auto& sp = subpulses[k];
    sp.peak_time = first + static_cast<double>(k) * period;
    sp.duration = tau;
    sp.envelope = envelope;
    sp.peak_rabi = continuous_rabi(source, ts) * (r2 / s0) * exact;
    sp.detuning = continuous_detuning(source, ts) * (r2 / r1) * exact;
  }
  return PulseTrain(std::move(subpulses), period, TrainRegime::Scaled,
                    SourceSampling{source, step, n});
}

/// Constant-amplitude, constant-frequency train (a frequency comb) with
/// period T = r1 tau, first peak at t0 and cumulative area `total_area` at
/// the carrier.
inline PulseTrain constant_frequency_train(std::size_t n, double r1, double tau, double total_area,
                                           double detuning = 0.0,
                                           const EnvelopeShape& envelope = EnvelopeShape::blackman(),
                                           double t0 = 0.0) {
  detail::check_train_request(n, r1);
  detail::require(std::isfinite(tau) && tau > 0.0, "subpulse duration must be positive");
  detail::require(total_area >= 0.0, "train area must be non-negative");
  const double period = r1 * tau;
  const double peak = total_area / (static_cast<double>(n) * tau * envelope.shape_factor());
  std::vector<Subpulse> subpulses(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& sp = subpulses[k];
    sp.peak_time = t0 + static_cast<double>(k) * period;
    sp.duration = tau;
    sp.envelope = envelope;
    sp.peak_rabi = peak;
    sp.detuning = detuning;
  }
  return PulseTrain(std::move(subpulses), period, TrainRegime::ConstantFrequency);
}

/// Residuals of the area and phase matching conditions
///   A_k = Omega~(t~_k) dt  and  T delta_k = delta~(t~_k) dt.
struct MatchingReport {
  std::vector<double> area_residuals;
  std::vector<double> phase_residuals;
  double max_area_residual = 0.0;
  double max_phase_residual = 0.0;
  double rms_area_residual = 0.0;
  double rms_phase_residual = 0.0;
};

inline MatchingReport verify_matching(const PulseTrain& train, const ContinuousPulse& source) {
  const auto& sampling = train.source();
  detail::require(sampling.has_value(), "train carries no source sampling");
  detail::require(sampling->count == train.size(), "subpulse count differs from source sampling");
  detail::require(sampling->count >= 2, "source sampling needs at least two points");
  const double step = source.duration / static_cast<double>(sampling->count - 1);
  detail::require(std::abs(step - sampling->step) <= 1e-12 * step,
                  "source duration does not match the train's sampling");

  MatchingReport report;
  double sum_area = 0.0;
  double sum_phase = 0.0;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const double t = sampling->time(k);
    const auto si = subpulse_integrals(train[k], train.period());
    const double da = std::abs(si.area - continuous_rabi(source, t) * step);
    const double dp = std::abs(si.phase - continuous_detuning(source, t) * step);
    report.area_residuals.push_back(da);
    report.phase_residuals.push_back(dp);
    report.max_area_residual = std::max(report.max_area_residual, da);
    report.max_phase_residual = std::max(report.max_phase_residual, dp);
    sum_area += da * da;
    sum_phase += dp * dp;
  }
  const double n = static_cast<double>(train.size());
  report.rms_area_residual = std::sqrt(sum_area / n);
  report.rms_phase_residual = std::sqrt(sum_phase / n);
  return report;
}

}  // namespace digirap
