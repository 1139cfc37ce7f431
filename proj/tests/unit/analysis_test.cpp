#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tbrelay/analysis.hpp"
#include "tbrelay/errors.hpp"
#include "tbrelay/scenarios.hpp"

namespace tbrelay {
namespace {

using std::numbers::pi;

std::vector<double> fringe(const std::vector<double>& x, double a, double v, double phase) {
  std::vector<double> y;
  for (double xi : x) y.push_back(a * (1.0 + v * std::cos(xi - phase)));
  return y;
}

std::vector<double> poisson(const std::vector<double>& mean, std::mt19937_64& rng) {
  std::vector<double> out;
  for (double m : mean) out.push_back(static_cast<double>(std::poisson_distribution<long>(m)(rng)));
  return out;
}

TEST(Analysis, NoiselessFullFringe) {
  const auto x = phase_grid(16, 2.0);
  const FitResult f = fit_fringe(x, fringe(x, 500.0, 1.0, 0.3));
  EXPECT_NEAR(f.visibility, 1.0, 1e-3);
  EXPECT_LE(f.visibility, 1.0);
  EXPECT_NEAR(f.phase, 0.3, 1e-9);
  EXPECT_NEAR(f.amplitude, 500.0, 1e-6);
}

TEST(Analysis, ConstantScanHasNoSignificantVisibility) {
  const auto x = phase_grid(16, 2.0);
  const std::vector<double> y(x.size(), 200.0);
  const FitResult f = fit_fringe(x, y);
  EXPECT_LT(f.visibility, 3.0 * f.sigma_visibility);
}

TEST(Analysis, FitPreconditions) {
  const std::vector<double> few{0.0, 1.0, 2.0, 3.0};
  EXPECT_THROW(fit_fringe(few, few), InsufficientPoints);
  const std::vector<double> narrow{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_THROW(fit_fringe(narrow, std::vector<double>(6, 1.0)), InsufficientPoints);
}

TEST(Analysis, OverUnityLinearFitIsConstrained) {
  const auto x = phase_grid(12, 1.0);
  auto y = fringe(x, 100.0, 1.0, 0.0);
  // push the trough negative-looking by lifting the peak
  y[0] *= 1.3;
  y[6] = 0.0;
  y[5] = y[7] = 0.0;
  const FitResult f = fit_fringe(x, y);
  EXPECT_GT(f.unconstrained_visibility, 1.0);
  EXPECT_TRUE(f.constrained);
  EXPECT_LE(f.visibility, 1.0);
  EXPECT_GE(f.visibility, 0.0);
}

TEST(AnalysisProperty, PhaseRelabeling) {
  std::mt19937_64 rng(3);
  const auto x = phase_grid(16, 2.0);
  const auto y = poisson(fringe(x, 80.0, 0.5, 0.7), rng);
  const FitResult f0 = fit_fringe(x, y);
  for (double shift : {0.4, -1.1, 2.5}) {
    std::vector<double> xs;
    for (double v : x) xs.push_back(v + shift);
    const FitResult f = fit_fringe(xs, y);
    EXPECT_NEAR(f.visibility, f0.visibility, 1e-9);
    EXPECT_NEAR(f.amplitude, f0.amplitude, 1e-9);
    EXPECT_NEAR(std::remainder(f.phase - f0.phase - shift, 2 * pi), 0.0, 1e-9);
  }
}

// Lab-scale statistics: about 35 counts per point on 16 points gives a
// visibility error near 0.06.
TEST(Analysis, RecoversLabScaleVisibility) {
  std::mt19937_64 rng(5);
  const auto x = phase_grid(16, 2.0);
  const FitResult f = fit_fringe(x, poisson(fringe(x, 35.0, 0.46, 0.0), rng));
  EXPECT_NEAR(f.visibility, 0.46, 2.0 * f.sigma_visibility);
  EXPECT_GT(f.sigma_visibility, 0.04);
  EXPECT_LT(f.sigma_visibility, 0.08);
}

TEST(AnalysisProperty, ParameterRecoveryCoverage) {
  std::mt19937_64 rng(99);
  const auto x = phase_grid(16, 2.0);
  for (double v : {0.2, 0.5, 0.9}) {
    int inside = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
      const FitResult f = fit_fringe(x, poisson(fringe(x, 400.0, v, 1.0), rng));
      if (std::abs(f.visibility - v) <= 3.0 * f.sigma_visibility) ++inside;
    }
    EXPECT_GE(inside, 990) << "V=" << v;
  }
}

TEST(Analysis, DipFitRecoversGaussian) {
  std::vector<double> x;
  std::vector<double> y;
  for (int i = -20; i <= 20; ++i) {
    const double dx = i * 20e-6;
    x.push_back(dx);
    y.push_back(10.0 * (1.0 - 0.3 * std::exp(-4.0 * std::log(2.0) * std::pow((dx - 5e-6) / 144e-6, 2))));
  }
  const DipFit f = fit_dip(x, y);
  EXPECT_NEAR(f.fwhm, 144e-6, 1e-10);
  EXPECT_NEAR(f.visibility, 0.3, 1e-9);
  EXPECT_NEAR(f.center, 5e-6, 1e-10);
  EXPECT_NEAR(f.baseline, 10.0, 1e-8);
}

TEST(Analysis, Fidelity) {
  EXPECT_DOUBLE_EQ(fidelity(0.46), 0.73);
  EXPECT_DOUBLE_EQ(fidelity(0.87), 0.935);
  EXPECT_DOUBLE_EQ(fidelity(1.0), 1.0);
  EXPECT_DOUBLE_EQ(fidelity(kClassicalLimit), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(fidelity(kCloningLimit), 5.0 / 6.0);
  EXPECT_THROW(fidelity(1.2), ConfigError);
}

TEST(AnalysisProperty, FidelityMonotone) {
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double f = fidelity(i / 100.0);
    EXPECT_GT(f, prev);
    prev = f;
  }
}

TEST(Analysis, NetVisibility) {
  EXPECT_DOUBLE_EQ(net_visibility(0.46, 10.0, 0.0).value, 0.46);
  EXPECT_NEAR(net_visibility(0.46, 10.0, 5.0).value, 0.92, 1e-15);
  const NetVisibility capped = net_visibility(0.5, 10.0, 6.0);
  EXPECT_DOUBLE_EQ(capped.value, 1.0);
  EXPECT_TRUE(capped.capped);
  EXPECT_THROW(net_visibility(0.5, 10.0, 10.0), ConfigError);
  EXPECT_NEAR(net_visibility(0.46, 10.0, 5.0, 0.06).sigma, 0.12, 1e-12);
}

TEST(AnalysisProperty, NetVisibilityIdentityWithoutBackground) {
  for (double v : {0.0, 0.1, 0.46, 0.87, 1.0}) {
    for (double m : {1.0, 37.0, 1e6}) EXPECT_DOUBLE_EQ(net_visibility(v, m, 0.0).value, v);
  }
}

TEST(Analysis, Classify) {
  EXPECT_EQ(classify(0.2), Classification::below_classical);
  EXPECT_EQ(classify(0.46), Classification::quantum);
  EXPECT_EQ(classify(0.87), Classification::above_cloning);
  EXPECT_EQ(classify(1.0 / 3.0), Classification::quantum);
  EXPECT_EQ(classify(2.0 / 3.0), Classification::above_cloning);
  EXPECT_EQ(to_string(Classification::quantum), "quantum");
}

}  // namespace
}  // namespace tbrelay
