#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "digirap/digitizer.hpp"
#include "digirap/pulses.hpp"
#include "digirap/quadrature.hpp"

namespace digirap {

namespace detail {

inline double normalized_sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - (pi * x) * (pi * x) / 6.0;
  return std::sin(pi * x) / (pi * x);
}

}  // namespace detail

/// Fourier transform of the normalized envelope of a pulse on
/// [0, duration]: integral of S(t / duration) exp(-i omega t) dt.
///
/// Blackman uses the closed form; other shapes use adaptive quadrature.
inline std::complex<double> envelope_transform(const EnvelopeShape& shape, double duration,
                                               double omega) {
  detail::require(duration > 0.0, "envelope duration must be positive");
  const std::complex<double> centre = std::polar(1.0, -0.5 * omega * duration);
  if (shape.kind() == EnvelopeKind::Blackman) {
    using detail::normalized_sinc;
    const double x = omega * duration / (2.0 * pi);
    const double value = 0.42 * normalized_sinc(x) +
                         0.25 * (normalized_sinc(x - 1.0) + normalized_sinc(x + 1.0)) +
                         0.04 * (normalized_sinc(x - 2.0) + normalized_sinc(x + 2.0));
    return centre * (duration * value);
  }
  // Integrate the centred envelope; its transform is real for symmetric
  // shapes, the sine part covers sampled tables.
  std::vector<double> breaks;
  for (double x : shape.kinks()) breaks.push_back((x - 0.5) * duration);
  const double half = 0.5 * duration;
  auto env = [&](double u) { return shape.at_fraction(u / duration + 0.5); };
  const double re = integrate([&](double u) { return env(u) * std::cos(omega * u); }, -half, half,
                              breaks, 1e-12);
  const double im = integrate([&](double u) { return -env(u) * std::sin(omega * u); }, -half,
                              half, breaks, 1e-12);
  return centre * std::complex<double>(re, im);
}

/// Angular spacing of the comb teeth, 2 pi / (peak-to-peak spacing).
inline double tooth_spacing(const PulseTrain& train) { return 2.0 * pi / train.spacing(); }

/// Single-subpulse spectral amplitude at angular frequency omega.
inline double spectral_amplitude(const PulseTrain& train, double omega) {
  return std::abs(envelope_transform(train.envelope(), train.subpulse_duration(), omega));
}

/// F(Omega_n): weight of comb tooth n. The comb structure factor is the
/// same for every tooth of an equally spaced train and is left out, so
/// F(Omega_0) = tau S0.
inline double sideband_amplitude(const PulseTrain& train, int n) {
  return spectral_amplitude(train, tooth_spacing(train) * static_cast<double>(n));
}

/// F(Omega_n) / F(Omega_0); `teeth` may be fractional for detunings between
/// teeth.
inline double sideband_ratio(const PulseTrain& train, double teeth) {
  return spectral_amplitude(train, tooth_spacing(train) * teeth) / spectral_amplitude(train, 0.0);
}

/// sin^2((pi/2) F(Omega_n) / F(Omega_0)): yield at tooth n of a train whose
/// carrier area is pi.
inline double predicted_sideband_yield(const PulseTrain& train, double teeth) {
  const double s = std::sin(0.5 * pi * sideband_ratio(train, teeth));
  return s * s;
}

/// Closed form for Gaussian subpulses, sin^2((pi/2) exp(-tau^2 n^2 / T^2)).
/// `tau` is the width parameter of that formula, passed through verbatim.
inline double gaussian_sideband_yield(double n, double tau, double period) {
  detail::require(period > 0.0, "train period must be positive");
  const double x = tau * n / period;
  const double s = std::sin(0.5 * pi * std::exp(-x * x));
  return s * s;
}

/// Width parameter of the closed Gaussian formula for this library's
/// Gaussian envelope (sigma = duration / 6): sqrt(2) pi sigma.
inline double gaussian_formula_width(double duration) {
  return std::numbers::sqrt2 * pi * duration / 6.0;
}

/// f_{n,m} = sqrt(F(Omega_n)^2 + F(Omega_m)^2) / F(Omega_0)
inline double superposition_prefactor(const PulseTrain& train, int n, int m) {
  const double fn = sideband_amplitude(train, n);
  const double fm = sideband_amplitude(train, m);
  return std::hypot(fn, fm) / sideband_amplitude(train, 0);
}

}  // namespace digirap
