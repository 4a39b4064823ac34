#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "digirap/error.hpp"
#include "digirap/quadrature.hpp"

namespace digirap {

inline constexpr double pi = std::numbers::pi;

enum class EnvelopeKind { Blackman, Gaussian, SampledTable };

/// One sample of a tabulated envelope: position as a fraction of the pulse
/// duration and the (unnormalized) amplitude there.
struct TablePoint {
  double fraction;
  double amplitude;
};

/// Normalized pulse envelope on the unit interval.
///
/// The envelope is evaluated on the fraction x = t / duration. It is zero
/// outside [0, 1] and its maximum on [0, 1] is exactly 1.
///
/// - Blackman: 0.42 - 0.5 cos(2 pi x) + 0.08 cos(4 pi x).
/// - Gaussian: exp(-(x - 1/2)^2 / (2 s^2)) with s = 1/6, i.e. truncated at
///   three standard deviations and not shifted to zero at the edges.
/// - SampledTable: linear interpolation between samples, rescaled so the
///   largest sample is 1. Samples must start at 0 and end at 1.
class EnvelopeShape {
 public:
  EnvelopeShape() = default;

  static EnvelopeShape blackman() { return EnvelopeShape(EnvelopeKind::Blackman); }
  static EnvelopeShape gaussian() { return EnvelopeShape(EnvelopeKind::Gaussian); }

  static EnvelopeShape table(std::vector<TablePoint> points) {
    detail::require(points.size() >= 2, "sampled envelope needs at least two points");
    std::sort(points.begin(), points.end(),
              [](const TablePoint& a, const TablePoint& b) { return a.fraction < b.fraction; });
    detail::require(points.front().fraction == 0.0 && points.back().fraction == 1.0,
                    "sampled envelope must span fractions 0 to 1");
    double peak = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::require(std::isfinite(points[i].amplitude) && points[i].amplitude >= 0.0,
                      "sampled envelope amplitudes must be finite and non-negative");
      if (i > 0) {
        detail::require(points[i].fraction > points[i - 1].fraction,
                        "sampled envelope fractions must be strictly increasing");
      }
      peak = std::max(peak, points[i].amplitude);
    }
    detail::require(peak > 0.0, "sampled envelope must have a positive sample");
    for (auto& p : points) p.amplitude /= peak;

    EnvelopeShape shape(EnvelopeKind::SampledTable);
    shape.table_ = std::make_shared<const std::vector<TablePoint>>(std::move(points));
    return shape;
  }

  EnvelopeKind kind() const { return kind_; }

  std::span<const TablePoint> samples() const {
    if (!table_) return {};
    return *table_;
  }

  /// Envelope at fraction x of the duration.
  double at_fraction(double x) const {
    if (x < 0.0 || x > 1.0) return 0.0;
    switch (kind_) {
      case EnvelopeKind::Blackman:
        return std::max(0.0, 0.42 - 0.5 * std::cos(2.0 * pi * x) + 0.08 * std::cos(4.0 * pi * x));
      case EnvelopeKind::Gaussian: {
        const double u = x - 0.5;
        return std::exp(-18.0 * u * u);
      }
      case EnvelopeKind::SampledTable: {
        const auto& pts = *table_;
        auto hi = std::upper_bound(pts.begin(), pts.end(), x,
                                   [](double v, const TablePoint& p) { return v < p.fraction; });
        if (hi == pts.end()) return pts.back().amplitude;
        auto lo = hi - 1;
        const double w = (x - lo->fraction) / (hi->fraction - lo->fraction);
        return lo->amplitude + w * (hi->amplitude - lo->amplitude);
      }
    }
    return 0.0;
  }

  /// Fractions at which the envelope is not smooth (table knots).
  std::vector<double> kinks() const {
    std::vector<double> out;
    for (const auto& p : samples()) out.push_back(p.fraction);
    return out;
  }

  /// Time average of the envelope over its support.
  double shape_factor() const {
    switch (kind_) {
      case EnvelopeKind::Blackman:
        return 0.42;
      case EnvelopeKind::Gaussian:
        // integral of exp(-18 u^2) over |u| <= 1/2
        return std::sqrt(pi / 18.0) * std::erf(3.0 / std::sqrt(2.0));
      case EnvelopeKind::SampledTable: {
        const auto& pts = *table_;
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
          sum += 0.5 * (pts[i].amplitude + pts[i + 1].amplitude) *
                 (pts[i + 1].fraction - pts[i].fraction);
        }
        return sum;
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case EnvelopeKind::Blackman: return "blackman";
      case EnvelopeKind::Gaussian: return "gaussian";
      case EnvelopeKind::SampledTable: return "table";
    }
    return "unknown";
  }

  friend bool operator==(const EnvelopeShape& a, const EnvelopeShape& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.kind_ != EnvelopeKind::SampledTable) return true;
    if (a.table_ == b.table_) return true;
    const auto sa = a.samples();
    const auto sb = b.samples();
    return std::equal(sa.begin(), sa.end(), sb.begin(), sb.end(),
                      [](const TablePoint& p, const TablePoint& q) {
                        return p.fraction == q.fraction && p.amplitude == q.amplitude;
                      });
  }

 private:
  explicit EnvelopeShape(EnvelopeKind kind) : kind_(kind) {}

  EnvelopeKind kind_ = EnvelopeKind::Blackman;
  std::shared_ptr<const std::vector<TablePoint>> table_;
};

/// Normalized envelope at time t for a pulse occupying [0, duration].
inline double envelope_value(const EnvelopeShape& shape, double t, double duration) {
  detail::require(duration > 0.0, "envelope duration must be positive");
  if (t < 0.0 || t > duration) return 0.0;
  return shape.at_fraction(t / duration);
}

inline double shape_factor(const EnvelopeShape& shape) { return shape.shape_factor(); }

/// The long linearly chirped reference pulse, switched on at t = 0.
///
/// Rabi frequency peak_rabi * S(t / duration); detuning
/// carrier_offset + chirp_rate * (t - duration / 2).
struct ContinuousPulse {
  double peak_rabi = 0.0;
  double duration = 1.0;
  double chirp_rate = 0.0;
  EnvelopeShape envelope = EnvelopeShape::blackman();
  double carrier_offset = 0.0;

  void validate() const {
    detail::require(std::isfinite(duration) && duration > 0.0, "pulse duration must be positive");
    detail::require(std::isfinite(peak_rabi) && peak_rabi >= 0.0,
                    "peak Rabi frequency must be non-negative");
    detail::require(std::isfinite(chirp_rate) && std::isfinite(carrier_offset),
                    "chirp rate and carrier offset must be finite");
  }

  /// Pulse with a prescribed total area and dimensionless chirp
  /// chirp_rate * duration^2.
  static ContinuousPulse from_area(double area, double duration, double dimensionless_chirp,
                                   EnvelopeShape envelope = EnvelopeShape::blackman(),
                                   double carrier_offset = 0.0) {
    detail::require(duration > 0.0, "pulse duration must be positive");
    detail::require(area >= 0.0, "pulse area must be non-negative");
    ContinuousPulse p;
    p.peak_rabi = area / (duration * envelope.shape_factor());
    p.duration = duration;
    p.chirp_rate = dimensionless_chirp / (duration * duration);
    p.envelope = std::move(envelope);
    p.carrier_offset = carrier_offset;
    p.validate();
    return p;
  }

  double dimensionless_chirp() const { return chirp_rate * duration * duration; }
};

inline double continuous_rabi(const ContinuousPulse& pulse, double t) {
  return pulse.peak_rabi * envelope_value(pulse.envelope, t, pulse.duration);
}

inline double continuous_detuning(const ContinuousPulse& pulse, double t) {
  return pulse.carrier_offset + pulse.chirp_rate * (t - 0.5 * pulse.duration);
}

/// Integral of the detuning from 0 to t (the chirp phase).
inline double chirp_phase(const ContinuousPulse& pulse, double t) {
  return pulse.carrier_offset * t + 0.5 * pulse.chirp_rate * t * (t - pulse.duration);
}

/// Integral of the Rabi frequency over the pulse support, by quadrature.
inline double pulse_area(const ContinuousPulse& pulse) {
  pulse.validate();
  if (pulse.peak_rabi == 0.0) return 0.0;
  std::vector<double> breaks;
  for (double x : pulse.envelope.kinks()) breaks.push_back(x * pulse.duration);
  return integrate([&](double t) { return continuous_rabi(pulse, t); }, 0.0, pulse.duration,
                   breaks);
}

}  // namespace digirap
