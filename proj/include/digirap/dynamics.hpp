#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "digirap/digitizer.hpp"
#include "digirap/error.hpp"
#include "digirap/pulses.hpp"

namespace digirap {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// 2x2 matrices in the Pauli basis

struct Matrix2 {
  std::array<cplx, 4> m{};  // row major: m00 m01 m10 m11

  cplx& operator()(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
  const cplx& operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

  static Matrix2 identity() { return {{1.0, 0.0, 0.0, 1.0}}; }

  Matrix2 adjoint() const {
    return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
  }

  friend Matrix2 operator*(const Matrix2& a, const Matrix2& b) {
    return {{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
             a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
  }
  friend Matrix2 operator+(const Matrix2& a, const Matrix2& b) {
    Matrix2 r;
    for (std::size_t i = 0; i < 4; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
  }
  friend Matrix2 operator-(const Matrix2& a, const Matrix2& b) {
    Matrix2 r;
    for (std::size_t i = 0; i < 4; ++i) r.m[i] = a.m[i] - b.m[i];
    return r;
  }
  friend Matrix2 operator*(cplx s, const Matrix2& a) {
    Matrix2 r;
    for (std::size_t i = 0; i < 4; ++i) r.m[i] = s * a.m[i];
    return r;
  }

  std::array<cplx, 2> apply(const std::array<cplx, 2>& v) const {
    return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
  }
};

namespace pauli {
inline const Matrix2 s0 = Matrix2::identity();
inline const Matrix2 s1{{0.0, 1.0, 1.0, 0.0}};
inline const Matrix2 s2{{0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0}};
inline const Matrix2 s3{{1.0, 0.0, 0.0, -1.0}};
}  // namespace pauli

/// Largest entry-wise modulus of a - b.
inline double max_abs_diff(const Matrix2& a, const Matrix2& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
  return d;
}

// ---------------------------------------------------------------------------
// Level structure and states

/// Ground state plus M excited levels. detunings[j] is E_j - E_0 minus the
/// reference carrier frequency; couplings[j] multiplies the field's Rabi
/// frequency on the 0 <-> j transition.
struct LevelSystem {
  std::vector<double> detunings{0.0};
  std::vector<double> couplings{1.0};

  static LevelSystem two_level(double detuning = 0.0) { return {{detuning}, {1.0}}; }

  static LevelSystem v_system(double detuning1, double detuning2, double g1 = 1.0,
                              double g2 = 1.0) {
    return {{detuning1, detuning2}, {g1, g2}};
  }

  std::size_t num_excited() const { return detunings.size(); }
  std::size_t dimension() const { return detunings.size() + 1; }

  void validate() const {
    detail::require(!detunings.empty(), "level system needs at least one excited level");
    detail::require(couplings.size() == detunings.size(),
                    "one coupling weight per excited level is required");
    for (std::size_t j = 0; j < detunings.size(); ++j) {
      detail::require(std::isfinite(detunings[j]), "level detunings must be finite");
      detail::require(std::isfinite(couplings[j]) && couplings[j] >= 0.0,
                      "coupling weights must be non-negative");
    }
  }
};

struct QuantumState {
  std::vector<cplx> amplitudes;

  static QuantumState ground(std::size_t num_excited) {
    QuantumState s;
    s.amplitudes.assign(num_excited + 1, 0.0);
    s.amplitudes[0] = 1.0;
    return s;
  }

  double norm_squared() const {
    double n = 0.0;
    for (const auto& c : amplitudes) n += std::norm(c);
    return n;
  }

  double population(std::size_t level) const { return std::norm(amplitudes.at(level)); }
};

/// Time-ordered record of a propagation run.
struct Trajectory {
  std::vector<double> times;
  std::vector<QuantumState> states;

  std::size_t size() const { return times.size(); }
  std::size_t num_levels() const { return states.empty() ? 0 : states.front().amplitudes.size(); }

  double population(std::size_t sample, std::size_t level) const {
    return states[sample].population(level);
  }

  std::vector<double> populations(std::size_t level) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.population(level));
    return out;
  }

  const QuantumState& final_state() const { return states.back(); }

  /// max over samples of |sum_j |c_j|^2 - 1|
  double max_norm_deviation() const {
    double d = 0.0;
    for (const auto& s : states) d = std::max(d, std::abs(s.norm_squared() - 1.0));
    return d;
  }

  void push(double t, const std::vector<cplx>& amplitudes) {
    if (!times.empty() && t <= times.back()) {
      states.back().amplitudes = amplitudes;
      return;
    }
    times.push_back(t);
    states.push_back(QuantumState{amplitudes});
  }
};

// ---------------------------------------------------------------------------
// Fixed-step classical Runge-Kutta on a ground-to-excited ("star") coupling

namespace detail {

/// i dc/dt = H c with H_{0j} = w_j, H_{j0} = conj(w_j), H_{jj} = d_j and
/// no coupling among excited levels.
struct StarHamiltonian {
  std::vector<cplx> coupling;
  std::vector<double> diagonal;

  explicit StarHamiltonian(std::size_t m) : coupling(m), diagonal(m, 0.0) {}

  void apply(std::span<const cplx> c, std::span<cplx> dcdt) const {
    const cplx minus_i(0.0, -1.0);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < coupling.size(); ++j) {
      acc += coupling[j] * c[j + 1];
      dcdt[j + 1] = minus_i * (std::conj(coupling[j]) * c[0] + diagonal[j] * c[j + 1]);
    }
    dcdt[0] = minus_i * acc;
  }
};

class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  /// One step of size h from t. `fill(t, H)` sets the Hamiltonian at time t.
  template <class Fill>
  void step(Fill& fill, StarHamiltonian& h_at, double t, double h, std::vector<cplx>& y) {
    if (!(h > 0.0) || t + h == t) {
      std::ostringstream os;
      os << "integrator step underflow at t=" << t << " (h=" << h << ")";
      throw NumericalFailure(os.str());
    }
    const std::size_t n = y.size();
    fill(t, h_at);
    h_at.apply(y, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    fill(t + 0.5 * h, h_at);
    h_at.apply(tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    h_at.apply(tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    fill(t + h, h_at);
    h_at.apply(tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

inline void check_state(const std::vector<cplx>& y, double t) {
  double n = 0.0;
  for (const auto& c : y) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      std::ostringstream os;
      os << "non-finite amplitude at t=" << t;
      throw NumericalFailure(os.str());
    }
    n += std::norm(c);
  }
  if (std::abs(n - 1.0) > 1e-6) {
    std::ostringstream os;
    os.precision(17);
    os << "norm drift at t=" << t << ": |c|^2=" << n << " (step too coarse?)";
    throw NumericalFailure(os.str());
  }
}

inline std::vector<cplx> initial_amplitudes(const LevelSystem& system,
                                            const std::optional<QuantumState>& initial) {
  if (!initial) return QuantumState::ground(system.num_excited()).amplitudes;
  detail::require(initial->amplitudes.size() == system.dimension(),
                  "initial state dimension does not match the level system");
  detail::require(std::abs(initial->norm_squared() - 1.0) <= 1e-12,
                  "initial state must be normalized");
  return initial->amplitudes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Propagators

enum class ContinuousFrame {
  /// Field frame: H_jj = Delta_j + delta~(t), real coupling.
  Detuning,
  /// Level frame: H_jj = 0, coupling carries exp(-i (Phi(t) + Delta_j t)).
  PhaseFactor,
};

struct ContinuousOptions {
  std::size_t sample_count = 2000;
  std::size_t steps_per_sample = 400;
  ContinuousFrame frame = ContinuousFrame::Detuning;
};

/// Integrate the Schroedinger equation under the continuous chirped pulse,
/// sampling at `sample_count` uniform times spanning [0, duration].
inline Trajectory propagate_continuous(const ContinuousPulse& pulse, const LevelSystem& system,
                                       const ContinuousOptions& options = {},
                                       const std::optional<QuantumState>& initial = std::nullopt) {
  pulse.validate();
  system.validate();
  detail::require(options.sample_count >= 2, "sample count must be at least 2");
  detail::require(options.steps_per_sample >= 1, "steps per sample must be at least 1");

  const std::size_t m = system.num_excited();
  auto y = detail::initial_amplitudes(system, initial);
  detail::StarHamiltonian ham(m);
  detail::Rk4Stepper stepper(y.size());

  auto fill = [&](double t, detail::StarHamiltonian& h) {
    const double rabi = continuous_rabi(pulse, t);
    if (options.frame == ContinuousFrame::Detuning) {
      const double detuning = continuous_detuning(pulse, t);
      for (std::size_t j = 0; j < m; ++j) {
        h.coupling[j] = -0.5 * system.couplings[j] * rabi;
        h.diagonal[j] = system.detunings[j] + detuning;
      }
    } else {
      const double phase = chirp_phase(pulse, t);
      for (std::size_t j = 0; j < m; ++j) {
        h.coupling[j] =
            -0.5 * system.couplings[j] * rabi * std::polar(1.0, -(phase + system.detunings[j] * t));
        h.diagonal[j] = 0.0;
      }
    }
  };

  Trajectory traj;
  const double interval = pulse.duration / static_cast<double>(options.sample_count - 1);
  const double h = interval / static_cast<double>(options.steps_per_sample);
  traj.times.reserve(options.sample_count);
  traj.states.reserve(options.sample_count);
  traj.push(0.0, y);
  for (std::size_t i = 1; i < options.sample_count; ++i) {
    const double t0 = static_cast<double>(i - 1) * interval;
    for (std::size_t s = 0; s < options.steps_per_sample; ++s) {
      stepper.step(fill, ham, t0 + static_cast<double>(s) * h, h, y);
    }
    const double t1 = static_cast<double>(i) * interval;
    detail::check_state(y, t1);
    traj.push(t1, y);
  }
  return traj;
}

struct TrainOptions {
  std::size_t samples_per_subpulse = 20;
  std::size_t steps_per_subpulse = 400;
};

/// Piecewise propagation through a pulse train in the frame rotating at each
/// level's own transition frequency. During subpulse k the 0 <-> j coupling
/// is -(g_j / 2) Omega_k(t) exp(-i (theta_k(t) + Delta_j t)), with theta_k
/// the train's carrier phase; free evolution between subpulses is the
/// identity in this frame.
inline Trajectory propagate_train(const PulseTrain& train, const LevelSystem& system,
                                  const TrainOptions& options = {},
                                  const std::optional<QuantumState>& initial = std::nullopt) {
  system.validate();
  detail::require(options.samples_per_subpulse >= 2, "samples per subpulse must be at least 2");
  detail::require(options.steps_per_subpulse >= 1, "steps per subpulse must be at least 1");

  const std::size_t m = system.num_excited();
  auto y = detail::initial_amplitudes(system, initial);
  detail::StarHamiltonian ham(m);
  detail::Rk4Stepper stepper(y.size());

  const std::size_t segments = options.samples_per_subpulse + 1;
  const std::size_t substeps = (options.steps_per_subpulse + segments - 1) / segments;
  const double tau = train.subpulse_duration();
  const double seg = tau / static_cast<double>(segments);
  const double h = seg / static_cast<double>(substeps);

  Trajectory traj;
  traj.times.reserve(train.size() * (segments + 1) + 1);
  traj.states.reserve(train.size() * (segments + 1) + 1);
  traj.push(train.start_time(), y);

  for (std::size_t k = 0; k < train.size(); ++k) {
    const Subpulse& sp = train[k];
    const double start = sp.start();
    traj.push(start, y);
    if (sp.peak_rabi == 0.0) {
      traj.push(sp.end(), y);
      continue;
    }
    auto fill = [&](double t, detail::StarHamiltonian& hm) {
      const double rabi = sp.peak_rabi * sp.envelope.at_fraction((t - start) / tau);
      const double theta = train.carrier_phase(k, t);
      for (std::size_t j = 0; j < m; ++j) {
        hm.coupling[j] =
            -0.5 * system.couplings[j] * rabi * std::polar(1.0, -(theta + system.detunings[j] * t));
      }
    };
    for (std::size_t s = 0; s < segments; ++s) {
      const double t0 = start + static_cast<double>(s) * seg;
      for (std::size_t q = 0; q < substeps; ++q) {
        stepper.step(fill, ham, t0 + static_cast<double>(q) * h, h, y);
      }
      const double t1 = (s + 1 == segments) ? sp.end() : t0 + seg;
      detail::check_state(y, t1);
      traj.push(t1, y);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// First-order analytic subunit propagators

/// exp(i (A sigma1 + phi sigma3) / 2)
inline Matrix2 magnus_subpulse_unitary(const SubpulseIntegrals& si) {
  const double ae = std::hypot(si.area, si.phase);
  if (ae == 0.0) return Matrix2::identity();
  const double c = std::cos(0.5 * ae);
  const double s = std::sin(0.5 * ae) / ae;
  const cplx i(0.0, 1.0);
  return c * pauli::s0 + (i * s) * (si.area * pauli::s1 + si.phase * pauli::s3);
}

/// sigma0 + (i/2) A sigma1 + (i/2) phi sigma3
inline Matrix2 linearized_subpulse_unitary(const SubpulseIntegrals& si) {
  const cplx half_i(0.0, 0.5);
  return pauli::s0 + half_i * (si.area * pauli::s1 + si.phase * pauli::s3);
}

/// Linearized subunit step dressed by the representation-change phase theta:
/// sigma0 + (i/2) A (cos(theta) sigma1 - sin(theta) sigma2) + (i/2) phi sigma3.
inline Matrix2 dressed_linear_step(double area, double phase, double theta) {
  const cplx half_i(0.0, 0.5);
  return pauli::s0 +
         half_i * (area * (std::cos(theta) * pauli::s1 - std::sin(theta) * pauli::s2) +
                   phase * pauli::s3);
}

/// phi reduced to (-pi, pi]
inline double wrap_phase(double phi) {
  double r = std::remainder(phi, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

struct AnalyticPropagation {
  /// Ordered product of the (non-unitary) linearized steps.
  Matrix2 propagator = Matrix2::identity();
  /// Peak time of each subpulse, with populations after that subunit.
  std::vector<double> times;
  std::vector<std::array<double, 2>> populations;
};

/// First-order oracle for a two-level train. Each subunit is the linearized
/// step in the field frame, whose free evolution rotates by phi_k = T delta_k
/// (wrapped to (-pi, pi]); the kick is dressed by theta_k = sum_{j<k} phi_j -
/// carrier phase at peak k, the mismatch between that bookkeeping and the
/// train's actual carrier. The state is renormalized after every step.
inline AnalyticPropagation analytic_train_propagator(
    const PulseTrain& train, const LevelSystem& system = LevelSystem::two_level()) {
  system.validate();
  detail::require(system.num_excited() == 1, "analytic train propagator needs a two-level system");
  detail::require(system.couplings[0] == 1.0 && system.detunings[0] == 0.0,
                  "analytic train propagator assumes unit coupling and zero level offset");

  AnalyticPropagation out;
  std::array<cplx, 2> state{1.0, 0.0};
  double bookkeeping = 0.0;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const auto si = subpulse_integrals(train[k], train.period());
    const double phi = wrap_phase(si.phase);
    const double theta = wrap_phase(bookkeeping - train.carrier_phase_at_peak(k));
    const Matrix2 step = dressed_linear_step(si.area, phi, theta);
    out.propagator = step * out.propagator;
    state = step.apply(state);
    const double norm = std::sqrt(std::norm(state[0]) + std::norm(state[1]));
    state[0] /= norm;
    state[1] /= norm;
    bookkeeping = wrap_phase(bookkeeping + phi);
    out.times.push_back(train[k].peak_time);
    out.populations.push_back({std::norm(state[0]), std::norm(state[1])});
  }
  return out;
}

}  // namespace digirap
