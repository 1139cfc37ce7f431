#include <gtest/gtest.h>

#include <cmath>

#include "tbrelay/errors.hpp"
#include "tbrelay/stability.hpp"

namespace tbrelay {
namespace {

TEST(Stability, RepRateLengthShift) {
  EXPECT_DOUBLE_EQ(rep_rate_length_shift(0.0), 0.0);
  const double dl = rep_rate_length_shift(400.0);
  EXPECT_NEAR(dl, 2.72 * 400.0 / 75e6, 1e-18);
  EXPECT_NEAR(dl, 15e-6, 0.05 * 15e-6);
  EXPECT_DOUBLE_EQ(rep_rate_length_shift(-400.0), -dl);
}

TEST(Stability, PulseSpacing) {
  EXPECT_NEAR(pulse_spacing(75e6, 1.47), 2.72, 0.01 * 2.72);
  EXPECT_NEAR(pulse_spacing(75e6, 1.0), 299792458.0 / 75e6, 1e-12);
  EXPECT_NEAR(pulse_spacing(75e6, 1.0), 4.0, 0.01);
  EXPECT_NEAR(pulse_spacing(150e6, 1.47), pulse_spacing(75e6, 1.47) / 2.0, 1e-15);
  EXPECT_THROW(pulse_spacing(0.0, 1.47), ConfigError);
}

TEST(Stability, MatchedGainCancelsCombinedDrift) {
  const DriftModel d;
  const Controller c;
  const double kappa = rep_rate_temperature_coupling(d, c.gain);
  // one kelvin: thermal + rep-rate length change equals gain * delta f
  const double drift = d.thermal_coefficient + rep_rate_length_shift(kappa, d.pulse_spacing, d.rep_rate);
  EXPECT_NEAR(drift, c.gain * kappa, 1e-15);
}

DriftModel still() {
  DriftModel d;
  d.temperature_amplitude = 0.0;
  d.jitter_bound = 0.0;
  return d;
}

TEST(Stability, ZeroDriftSitsAtDipMinimum) {
  for (const auto& s : simulate(still(), std::nullopt)) {
    EXPECT_NEAR(s.norm_coincidences, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(s.delta_x, 0.0);
  }
}

TEST(Stability, FreeDriftRisesToPlateau) {
  DriftModel d;
  d.jitter_bound = 0.0;
  StabilityOptions opt;
  opt.duration = 12 * 3600.0;
  const auto s = simulate(d, std::nullopt, opt);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s[i].norm_coincidences, s[i - 1].norm_coincidences - 1e-15);
  EXPECT_GT(s.back().norm_coincidences, 0.995);
}

TEST(Stability, RepRateSlopeBounded) {
  const DriftModel d;
  StabilityOptions opt;
  const auto s = simulate(d, std::nullopt, opt);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double slope = std::abs(s[i].rep_rate - s[i - 1].rep_rate) / (opt.dt / 3600.0);
    EXPECT_LE(slope, d.rep_rate_wander_bound * (1.0 + 1e-9));
  }
}

TEST(StabilityProperty, MatchedControllerBoundsResidual) {
  const DriftModel d;
  const Controller c;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    StabilityOptions opt;
    opt.seed = seed;
    for (const auto& s : simulate(d, c, opt)) {
      EXPECT_LE(std::abs(s.delta_x), c.resolution + d.jitter_bound + 1e-15);
      // motor positions are whole multiples of the resolution
      EXPECT_NEAR(std::remainder(s.motor, c.resolution), 0.0, 1e-15);
    }
  }
}

TEST(StabilityProperty, RerunsAreBitIdentical) {
  const DriftModel d;
  const auto a = simulate(d, Controller{});
  const auto b = simulate(d, Controller{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].delta_x, b[i].delta_x);
    EXPECT_EQ(a[i].norm_coincidences, b[i].norm_coincidences);
  }
}

TEST(StabilityProperty, CoincidencesMonotoneInMismatch) {
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double c = normalized_coincidences(i * 5e-6);
    EXPECT_GE(c, prev);
    EXPECT_DOUBLE_EQ(c, normalized_coincidences(-i * 5e-6));
    prev = c;
  }
}

TEST(Stability, GainErrorLeavesResidualDrift) {
  const DriftModel d;
  Controller c;
  c.gain_error = 0.2;
  double worst = 0.0;
  for (const auto& s : simulate(d, c)) worst = std::max(worst, std::abs(s.delta_x));
  EXPECT_GT(worst, c.resolution + d.jitter_bound);
}

TEST(Stability, PidAlternative) {
  const DriftModel d;
  EXPECT_TRUE(pid_alternative_analysis(d, 1e6).feasible);
  // about a thousand coincidences per 53 minute point
  EXPECT_FALSE(pid_alternative_analysis(d, 1000.0 / (53 * 60.0)).feasible);
  const auto r = pid_alternative_analysis(still(), 1e-3);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(std::isinf(r.drift_time));
  EXPECT_THROW(pid_alternative_analysis(d, 0.0), ConfigError);
}

TEST(Stability, RejectsBadInputs) {
  StabilityOptions opt;
  opt.dt = 0.0;
  EXPECT_THROW(simulate(DriftModel{}, std::nullopt, opt), ConfigError);
  DriftModel d;
  d.thermal_coefficient = -1.0;
  EXPECT_THROW(simulate(d, std::nullopt), ConfigError);
}

}  // namespace
}  // namespace tbrelay
