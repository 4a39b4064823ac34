#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "digirap/digitizer.hpp"
#include "oracles.hpp"

using namespace digirap;

namespace {

ContinuousPulse chirped_5pi() { return ContinuousPulse::from_area(5 * pi, 1.0, 291.6); }

const EnvelopeShape kFlat = EnvelopeShape::table({{0.0, 1.0}, {1.0, 1.0}});

}  // namespace

TEST(DigitizeMatched, HundredSubpulseLayout) {
  const auto train = digitize_matched(chirped_5pi(), 100, 100.0);
  ASSERT_EQ(train.size(), 100u);
  EXPECT_EQ(train.regime(), TrainRegime::Matched);
  EXPECT_NEAR(train.spacing(), 1.0 / 99.0, 1e-15);
  EXPECT_NEAR(train.subpulse_duration(), 1.0 / (99.0 * 101.0), 1e-18);
  EXPECT_NEAR(train.period(), 100.0 * train.subpulse_duration(), 1e-15);
  EXPECT_NEAR(train.r1(), 100.0, 1e-12);

  // Even N: the two central subpulses share the largest amplitude and carry
  // opposite detunings.
  auto biggest = std::max_element(train.subpulses().begin(), train.subpulses().end(),
                                  [](const Subpulse& a, const Subpulse& b) { return a.peak_rabi < b.peak_rabi; });
  const auto k = static_cast<std::size_t>(biggest - train.subpulses().begin());
  EXPECT_TRUE(k == 49 || k == 50);
  EXPECT_NEAR(train[49].peak_rabi, train[50].peak_rabi, 1e-9);
  EXPECT_NEAR(train[49].detuning, -train[50].detuning, 1e-9);
}

TEST(DigitizeMatched, OddCountHasResonantCentre) {
  const auto train = digitize_matched(chirped_5pi(), 101, 100.0);
  const std::size_t mid = 50;
  EXPECT_NEAR(train[mid].detuning, 0.0, 1e-12);
  for (std::size_t k = 0; k < train.size(); ++k) {
    EXPECT_LE(train[k].peak_rabi, train[mid].peak_rabi);
  }
}

TEST(DigitizeMatched, ZeroFieldKeepsRamp) {
  auto source = chirped_5pi();
  source.peak_rabi = 0.0;
  const auto train = digitize_matched(source, 20, 10.0);
  for (std::size_t k = 0; k < train.size(); ++k) {
    EXPECT_EQ(train[k].peak_rabi, 0.0);
    const double t = static_cast<double>(k) / 19.0;
    EXPECT_NEAR(train[k].detuning, continuous_detuning(source, t) * 1.1, 1e-12);
  }
}

TEST(DigitizeMatched, TwoSubpulsesSpanSource) {
  const auto source = ContinuousPulse::from_area(2.0, 1.0, 10.0, kFlat);
  const auto train = digitize_matched(source, 2, 1.0, kFlat);
  EXPECT_DOUBLE_EQ(train[0].peak_time, 0.0);
  EXPECT_DOUBLE_EQ(train[1].peak_time, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(train[k].peak_rabi, continuous_rabi(source, train[k].peak_time) * 2.0, 1e-12);
  }
}

TEST(DigitizeMatched, DetuningFidelity) {
  for (double r1 : {1.0, 3.5, 100.0}) {
    const auto source = chirped_5pi();
    const auto train = digitize_matched(source, 37, r1);
    for (std::size_t k = 0; k < train.size(); ++k) {
      const double target = continuous_detuning(source, static_cast<double>(k) / 36.0);
      if (target == 0.0) continue;
      EXPECT_NEAR(train[k].detuning / target, 1.0 + 1.0 / r1, 1e-14);
    }
  }
}

TEST(DigitizeMatched, UniformSpacing) {
  const auto train = digitize_matched(chirped_5pi(), 500, 100.0);
  for (std::size_t k = 1; k < train.size(); ++k) {
    EXPECT_NEAR(train[k].peak_time - train[k - 1].peak_time, train.spacing(), 1e-15);
  }
}

TEST(DigitizeMatched, RejectsBadRequests) {
  EXPECT_THROW(digitize_matched(chirped_5pi(), 1, 100.0), InvalidArgument);
  try {
    digitize_matched(chirped_5pi(), 100, 0.5);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("subpulses overlap"), std::string::npos);
  }
}

TEST(DigitizeScaled, UnitR2Layout) {
  const auto train = digitize_scaled(chirped_5pi(), 100, 100.0, 1.0);
  EXPECT_NEAR(train.subpulse_duration(), 0.01, 1e-16);
  EXPECT_NEAR(train.period(), 1.0, 1e-14);
  EXPECT_NEAR(train.spacing(), 1.0, 1e-14);
  EXPECT_NEAR(train[0].peak_time, 0.005, 1e-16);
  EXPECT_NEAR(train.r2(), 1.0, 1e-14);
  EXPECT_EQ(train.regime(), TrainRegime::Scaled);
}

TEST(DigitizeScaled, ZeroField) {
  auto source = chirped_5pi();
  source.peak_rabi = 0.0;
  const auto train = digitize_scaled(source, 10, 5.0, 2.0);
  for (const auto& sp : train.subpulses()) EXPECT_EQ(sp.peak_rabi, 0.0);
  EXPECT_THROW(digitize_scaled(source, 10, 5.0, 0.0), InvalidArgument);
  EXPECT_THROW(digitize_scaled(source, 10, 0.9, 1.0), InvalidArgument);
}

TEST(DigitizeScaled, AgreesWithMatchedAtEquivalentR2) {
  for (std::size_t n : {5u, 100u, 333u}) {
    for (double r1 : {1.0, 10.0, 100.0}) {
      const auto source = chirped_5pi();
      const double nn = static_cast<double>(n);
      const double r2 = (nn - 1.0) * (1.0 + r1) / nn;
      const auto a = digitize_matched(source, n, r1);
      const auto b = digitize_scaled(source, n, r1, r2);
      EXPECT_NEAR(b.subpulse_duration() / a.subpulse_duration(), 1.0, 1e-12);
      for (std::size_t k = 0; k < n; ++k) {
        const double ra = a[k].peak_rabi;
        const double da = a[k].detuning;
        EXPECT_NEAR(b[k].peak_rabi, ra, 1e-12 * std::max(1.0, ra));
        EXPECT_NEAR(b[k].detuning, da, 1e-12 * std::max(1.0, std::abs(da)));
      }
    }
  }
}

TEST(SubpulseIntegrals, Basics) {
  Subpulse zero;
  zero.peak_rabi = 0.0;
  const auto z = subpulse_integrals(zero, 1.0);
  EXPECT_EQ(z.area, 0.0);
  EXPECT_EQ(z.phase, 0.0);
  EXPECT_EQ(z.effective_area, 0.0);

  Subpulse sp;
  sp.duration = 1.0;
  sp.envelope = kFlat;
  sp.peak_rabi = 3.0;
  sp.detuning = 4.0;
  const auto si = subpulse_integrals(sp, 1.0);
  EXPECT_DOUBLE_EQ(si.area, 3.0);
  EXPECT_DOUBLE_EQ(si.phase, 4.0);
  EXPECT_DOUBLE_EQ(si.effective_area, 5.0);
}

TEST(SubpulseIntegrals, AreaAgreesWithQuadrature) {
  const auto train = digitize_matched(chirped_5pi(), 101, 100.0);
  const auto& sp = train[50];
  const double direct =
      oracle::simpson([&](double t) { return sp.rabi(t); }, sp.start(), sp.end(), 4000);
  EXPECT_NEAR(subpulse_integrals(sp, train.period()).area, direct, 1e-12 * direct);
  EXPECT_NEAR(direct, continuous_rabi(chirped_5pi(), 0.5) * train.spacing(), 1e-12 * direct);
}

TEST(VerifyMatching, ConstructionIdentity) {
  for (const auto& train : {digitize_matched(chirped_5pi(), 100, 100.0),
                            digitize_scaled(chirped_5pi(), 100, 100.0, 1.0),
                            digitize_scaled(chirped_5pi(), 57, 3.0, 0.4)}) {
    const auto report = verify_matching(train, chirped_5pi());
    double amax = 0.0;
    for (const auto& sp : train.subpulses()) amax = std::max(amax, sp.area());
    EXPECT_LE(report.max_area_residual, 1e-12 * amax);
    EXPECT_LE(report.max_phase_residual, 1e-12 * 145.8 / 99.0 * 10);
  }
}

TEST(VerifyMatching, DetectsPerturbation) {
  const auto train = digitize_matched(chirped_5pi(), 100, 100.0);
  std::vector<Subpulse> sps(train.subpulses().begin(), train.subpulses().end());
  const std::size_t k = 40;
  sps[k].peak_rabi *= 1.1;
  const PulseTrain bad(sps, train.period(), TrainRegime::Custom, train.source());
  const auto report = verify_matching(bad, chirped_5pi());
  EXPECT_NEAR(report.area_residuals[k], 0.1 * train[k].area(), 1e-12);
  EXPECT_NEAR(report.max_area_residual, 0.1 * train[k].area(), 1e-12);
}

TEST(VerifyMatching, ZeroTrain) {
  auto source = chirped_5pi();
  source.peak_rabi = 0.0;
  source.chirp_rate = 0.0;
  const auto report = verify_matching(digitize_matched(source, 30, 10.0), source);
  EXPECT_EQ(report.max_area_residual, 0.0);
  EXPECT_EQ(report.max_phase_residual, 0.0);
}

TEST(VerifyMatching, NeedsSource) {
  const auto comb = constant_frequency_train(10, 100.0, 0.01, pi);
  EXPECT_THROW(verify_matching(comb, chirped_5pi()), InvalidArgument);
}

TEST(AreaConservation, RiemannSumIdentity) {
  for (std::size_t n : {10u, 100u, 500u}) {
    const auto source = chirped_5pi();
    const auto train = digitize_matched(source, n, 100.0);
    double sum_a = 0.0;
    double riemann = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      sum_a += train[k].area();
      riemann += continuous_rabi(source, train.source()->time(k)) * train.source()->step;
    }
    EXPECT_NEAR(sum_a, riemann, 1e-12 * riemann);
  }
  // and the Riemann sum approaches the pulse area
  const auto train = digitize_matched(chirped_5pi(), 500, 100.0);
  double sum_a = 0.0;
  for (const auto& sp : train.subpulses()) sum_a += sp.area();
  EXPECT_NEAR(sum_a, 5 * pi, 1e-6);
}

TEST(PulseTrain, ConstantFrequencyCarrierIsAbsoluteTime) {
  const auto comb = constant_frequency_train(10, 100.0, 0.01, pi, 7.0, EnvelopeShape::blackman(), 0.3);
  EXPECT_TRUE(comb.constant_frequency());
  EXPECT_TRUE(comb.constant_amplitude());
  for (std::size_t k = 0; k < comb.size(); ++k) {
    const double t = comb[k].peak_time + 0.001;
    EXPECT_DOUBLE_EQ(comb.carrier_phase(k, t), 7.0 * t);
  }
  double total = 0.0;
  for (const auto& sp : comb.subpulses()) total += sp.area();
  EXPECT_NEAR(total, pi, 1e-14);
}

TEST(PulseTrain, CarrierPhaseIsContinuous) {
  const auto train = digitize_matched(chirped_5pi(), 50, 10.0);
  for (std::size_t k = 0; k + 1 < train.size(); ++k) {
    const double advance = train.carrier_phase_at_peak(k + 1) - train.carrier_phase_at_peak(k);
    const double expected = 0.5 * (train[k].detuning + train[k + 1].detuning) * train.spacing();
    EXPECT_NEAR(advance, expected, 1e-11);
  }
}

TEST(PulseTrain, ScaledAndRetuned) {
  const auto comb = constant_frequency_train(10, 100.0, 0.01, pi);
  const auto s = comb.scaled(2.5);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_DOUBLE_EQ(s[k].peak_rabi, 2.5 * comb[k].peak_rabi);
  const auto d = comb.with_detuning(3.0);
  for (const auto& sp : d.subpulses()) EXPECT_EQ(sp.detuning, 3.0);
  EXPECT_THROW(comb.scaled(-1.0), InvalidArgument);
}

TEST(PulseTrain, ConstructorValidates) {
  Subpulse a;
  a.duration = 0.1;
  Subpulse b = a;
  b.peak_time = 1.0;
  EXPECT_NO_THROW(PulseTrain({a, b}, 1.0));
  EXPECT_THROW(PulseTrain({a}, 1.0), InvalidArgument);
  EXPECT_THROW(PulseTrain({a, b}, 0.05), InvalidArgument);
  Subpulse c = b;
  c.peak_time = 2.5;
  EXPECT_THROW(PulseTrain({a, b, c}, 1.0), InvalidArgument);
  Subpulse d = b;
  d.duration = 0.2;
  EXPECT_THROW(PulseTrain({a, d}, 1.0), InvalidArgument);
}
