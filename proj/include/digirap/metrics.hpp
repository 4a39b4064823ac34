#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "digirap/digitizer.hpp"
#include "digirap/dynamics.hpp"
#include "digirap/error.hpp"
#include "digirap/spectrum.hpp"

namespace digirap {

/// Affine map from train time to continuous-pulse time.
struct TimeMapping {
  double scale = 1.0;
  double offset = 0.0;

  double operator()(double t) const { return offset + scale * t; }

  static TimeMapping identity() { return {}; }

  /// Sends subpulse peak times onto the source sample times. Identity for
  /// duration-matched trains and for trains without a source.
  static TimeMapping for_train(const PulseTrain& train) {
    if (!train.source()) return identity();
    const double scale = train.source()->step / train.spacing();
    return {scale, -scale * train[0].peak_time};
  }
};

namespace detail {

inline double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace detail

/// RMS population difference sigma_P over the overlap of the two supports,
///   sqrt( (1/L) integral (P_ref(t) - P_other(map^-1(t)))^2 dt ),
/// by the trapezoidal rule on the union of both sample grids with linear
/// interpolation of populations.
inline double integrated_population_error(const Trajectory& reference, const Trajectory& other,
                                          const TimeMapping& mapping = TimeMapping::identity(),
                                          std::size_t level = 0) {
  detail::require(reference.size() >= 2 && other.size() >= 2,
                  "trajectories need at least two samples");
  detail::require(level < reference.num_levels() && level < other.num_levels(),
                  "population level out of range");
  detail::require(mapping.scale > 0.0, "time mapping must be increasing");

  std::vector<double> mapped(other.times.size());
  std::transform(other.times.begin(), other.times.end(), mapped.begin(), mapping);
  const double lo = std::max(reference.times.front(), mapped.front());
  const double hi = std::min(reference.times.back(), mapped.back());
  detail::require(hi > lo, "trajectories do not overlap after time mapping");

  std::vector<double> grid{lo, hi};
  for (double t : reference.times) {
    if (t > lo && t < hi) grid.push_back(t);
  }
  for (double t : mapped) {
    if (t > lo && t < hi) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto p_ref = reference.populations(level);
  const auto p_other = other.populations(level);
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = detail::interpolate(reference.times, p_ref, grid[i]) -
                     detail::interpolate(mapped, p_other, grid[i]);
    const double sq = d * d;
    if (i > 0) integral += 0.5 * (sq + prev) * (grid[i] - grid[i - 1]);
    prev = sq;
  }
  return std::sqrt(integral / (hi - lo));
}

inline double final_yield(const Trajectory& traj, std::size_t level) {
  detail::require(traj.size() > 0, "empty trajectory");
  detail::require(level < traj.num_levels(), "population level out of range");
  return traj.final_state().population(level);
}

/// P1 / (P1 + P2) at the final time of a V-system run.
inline double superposition_ratio(const Trajectory& traj) {
  detail::require(traj.size() > 0 && traj.num_levels() == 3,
                  "superposition ratio needs a V system with two excited levels");
  const double p1 = final_yield(traj, 1);
  const double p2 = final_yield(traj, 2);
  if (p1 + p2 < 1e-12) throw UndefinedRatio("excited-state population vanishes");
  return p1 / (p1 + p2);
}

/// Final excited population of a two-level system driven by `train` with its
/// carrier retuned to `detuning`.
inline double train_yield(const PulseTrain& train, double detuning,
                          const TrainOptions& options = {}) {
  const auto traj =
      propagate_train(train.with_detuning(detuning), LevelSystem::two_level(), options);
  return final_yield(traj, 1);
}

/// Yields around comb tooth n. The template (a constant-frequency train) is
/// rescaled by F(Omega_0)/F(Omega_n) so the local area stays that of the
/// carrier, and detuned by 2 pi n / spacing + offset for each offset.
inline std::vector<double> detuning_profile(const PulseTrain& carrier_train, int n,
                                            std::span<const double> offsets,
                                            const TrainOptions& options = {}) {
  detail::require(carrier_train.constant_frequency(),
                  "detuning profile needs a constant-frequency train");
  const double ratio = sideband_ratio(carrier_train, n);
  detail::require(ratio > 0.0, "sideband lies on a spectral null");
  const PulseTrain rescaled = carrier_train.scaled(1.0 / ratio);
  const double base = carrier_train[0].detuning + tooth_spacing(carrier_train) * n;
  std::vector<double> out;
  out.reserve(offsets.size());
  for (double offset : offsets) out.push_back(train_yield(rescaled, base + offset, options));
  return out;
}

}  // namespace digirap
