#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tbrelay/analysis.hpp"
#include "tbrelay/errors.hpp"
#include "tbrelay/scenarios.hpp"

namespace tbrelay {
namespace {

ExperimentConfig ideal() {
  ExperimentConfig c = build_default_config();
  c.loss_bob_db = 0.0;
  c = with_dark_counts(c, 0.0);
  for (DetectorModel* m : {&c.detectors.ge, &c.detectors.ingaas_bsa, &c.detectors.herald, &c.detectors.bob}) {
    m->efficiency = 1.0;
  }
  return c;
}

double fitted_visibility(const ExperimentConfig& c) {
  const auto x = phase_grid(12, 2.0);
  const ScanResult r = run_teleport_scan(c, x);
  return fit_fringe(r.control, r.counts).visibility;
}

TEST(Scenarios, DefaultsFromTheSetup) {
  const ExperimentConfig c = build_default_config();
  EXPECT_DOUBLE_EQ(c.rep_rate, 75e6);
  EXPECT_DOUBLE_EQ(c.loss_bob_db, 2.0);
  EXPECT_DOUBLE_EQ(c.bin_pitch, 1.2e-9);
  EXPECT_EQ(c.max_photons, 4);
  EXPECT_FALSE(c.detectors.bob.calibrated);
  EXPECT_NO_THROW(c.validate());
}

TEST(Scenarios, PhaseGrid) {
  const auto g = phase_grid(8, 2.0);
  ASSERT_EQ(g.size(), 8U);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], std::numbers::pi / 2.0, 1e-15);
  EXPECT_LT(g.back(), 4.0 * std::numbers::pi);
}

TEST(Scenarios, HeraldedSinglePhotonsShowNoCoincidences) {
  ExperimentConfig c = ideal();
  c.single_pairs = true;
  c.heralded = true;
  const std::vector<double> dx{0.0};
  const MandelResult r = run_mandel_scan(c, dx);
  EXPECT_LT(r.short_path.probability[0], 1e-12);
  EXPECT_LT(r.long_path.probability[0], 1e-12);
}

TEST(Scenarios, AnalyticCountsAreProbabilityTimesPulses) {
  ExperimentConfig c = build_default_config();
  c.pulses_per_point = 123456789;
  const auto x = phase_grid(6, 1.0);
  const ScanResult r = run_teleport_scan(c, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(r.counts[i], r.probability[i] * 123456789.0);
    EXPECT_GE(r.counts[i], 0.0);
    EXPECT_EQ(r.std_error[i], 0.0);
  }
}

TEST(ScenariosProperty, FringeMeanIndependentOfBobPhase) {
  const ExperimentConfig c = build_default_config();
  TeleportModel model(c);
  std::vector<double> w;
  for (const auto& b : model.branches().branches) w.push_back(b.weight);
  const double psi = model.outcome(0.0, w, c.detectors).psi_minus_and_herald;
  for (double phi : {0.3, 1.7, 3.0, 5.5}) {
    EXPECT_NEAR(model.outcome(phi, w, c.detectors).psi_minus_and_herald, psi, 1e-9 * psi);
  }
  // the fitted mean does not move with the grid's starting phase
  const auto x = phase_grid(12, 2.0);
  std::vector<double> shifted;
  for (double v : x) shifted.push_back(v + 0.37);
  const double a0 = fit_fringe(x, run_teleport_scan(c, x).counts).amplitude;
  const double a1 = fit_fringe(shifted, run_teleport_scan(c, shifted).counts).amplitude;
  EXPECT_NEAR(a1, a0, 1e-9 * a0);
}

TEST(ScenariosProperty, HeraldingNeverLowersVisibility) {
  for (double p : {0.02, 0.05, 0.13}) {
    ExperimentConfig c = build_default_config();
    c.pair_mean_common = p;
    ExperimentConfig h = c;
    h.heralded = true;
    EXPECT_GE(fitted_visibility(h), fitted_visibility(c)) << "P=" << p;
  }
}

// Multi-pair noise grows faster than the signal; dark counts are off because
// a fixed dark rate eventually dominates a dimmer source.
TEST(ScenariosProperty, DimmerSourcesNeverLowerVisibility) {
  const ExperimentConfig base = with_dark_counts(build_default_config(), 0.0);
  for (bool heralded : {false, true}) {
    double prev = -1.0;
    for (double s : {1.0, 0.7, 0.4, 0.2, 0.05}) {
      ExperimentConfig c = base;
      c.heralded = heralded;
      c.pair_mean_alice *= s;
      c.pair_mean_epr *= s;
      const double v = fitted_visibility(c);
      EXPECT_GE(v, prev - 1e-9) << "s=" << s;
      prev = v;
    }
  }
}

TEST(ScenariosProperty, MandelDipsShareTheirMinimum) {
  ExperimentConfig c = build_default_config();
  std::vector<double> dx;
  for (int i = -10; i <= 10; ++i) dx.push_back(i * 30e-6);
  const MandelResult r = run_mandel_scan(c, dx);
  auto argmin = [](const std::vector<double>& v) { return std::min_element(v.begin(), v.end()) - v.begin(); };
  EXPECT_EQ(argmin(r.short_path.probability), argmin(r.long_path.probability));
  EXPECT_EQ(dx[static_cast<std::size_t>(argmin(r.short_path.probability))], 0.0);
}

TEST(Scenarios, BlockingBackgrounds) {
  ExperimentConfig c = with_dark_counts(build_default_config(), 0.0);
  EXPECT_EQ(run_blocking(c, Blocked::both), 0.0);
  // Bob only receives EPR photons
  EXPECT_EQ(run_blocking(c, Blocked::epr), 0.0);
  // double EPR pairs fake a Bell-state detection on their own
  EXPECT_GT(run_blocking(c, Blocked::alice), 0.0);
  c.heralded = true;
  EXPECT_LT(run_blocking(c, Blocked::alice), 1e-15);
  // with darks the alice-blocked heralded channel only sees dark-count products
  const ExperimentConfig d = with_dark_counts(c, 1e-4);
  EXPECT_LT(run_blocking(d, Blocked::alice), 1e-9);
}

TEST(Scenarios, NoiseBudgetCombinesBlockedRuns) {
  const NoiseBudget b = noise_budget(build_default_config());
  EXPECT_NEAR(b.background, b.background_alice + b.background_epr - b.background_both, 1e-20);
  EXPECT_GT(b.signal(), 0.0);
}

TEST(Scenarios, CalibrationHitsTheTargetRatio) {
  const Calibration cal = calibrate_dark_counts(build_default_config(), 1.0);
  EXPECT_NEAR(cal.budget.background / cal.budget.signal(), 1.0, 1e-6);
  EXPECT_GT(cal.dark_prob, 0.0);
  EXPECT_LT(cal.dark_prob, 0.1);
  // the shipped default is the same fit at six photons
  ExperimentConfig six = build_default_config();
  six.max_photons = 6;
  EXPECT_NEAR(calibrate_dark_counts(six).dark_prob, kDefaultDarkProb, 1e-6 * kDefaultDarkProb);
}

TEST(Scenarios, IdealBellAnalyzerEfficiency) {
  ExperimentConfig c = ideal();
  c.symmetric_bsa = true;
  EXPECT_NEAR(ideal_bsa_success_probability(c), 0.25, 1e-9);
  c.symmetric_bsa = false;
  EXPECT_NEAR(ideal_bsa_success_probability(c), 0.125, 1e-9);
}

TEST(Scenarios, IdealTeleportationFringe) {
  ExperimentConfig c = ideal();
  c.single_pairs = true;
  EXPECT_GE(fitted_visibility(c), 0.999);
}

TEST(Scenarios, BranchTruncation) {
  ExperimentConfig c = build_default_config();
  const BranchSet b = pair_branches(c, c.mean_alice(), c.mean_epr());
  double total = 0.0;
  for (const auto& br : b.branches) {
    EXPECT_LE(2 * (br.alice + br.epr), c.max_photons);
    total += br.weight;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(b.truncated_mass, 0.0);
  c.max_truncated_mass = 1e-6;
  EXPECT_THROW(pair_branches(c, c.mean_alice(), c.mean_epr()), TailMassTooLarge);
  c.single_pairs = true;
  const BranchSet one = pair_branches(c, c.mean_alice(), c.mean_epr());
  ASSERT_EQ(one.branches.size(), 1U);
  EXPECT_EQ(one.branches[0].alice, 1);
  EXPECT_EQ(one.branches[0].epr, 1);
}

TEST(Scenarios, MonteCarloReproducibleAndConsistent) {
  ExperimentConfig c = build_default_config();
  c.mode = EvaluationMode::montecarlo;
  c.trials = 100000;
  const auto x = phase_grid(4, 1.0);
  const ScanResult a = run_teleport_scan(c, x);
  const ScanResult b = run_teleport_scan(c, x);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.probability, b.probability);
  ExperimentConfig exact = c;
  exact.mode = EvaluationMode::analytic;
  const ScanResult e = run_teleport_scan(exact, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GT(a.std_error[i], 0.0);
    EXPECT_LT(std::abs(a.probability[i] - e.probability[i]), 4.0 * a.std_error[i]);
  }
  c.seed = 777;
  EXPECT_NE(run_teleport_scan(c, x).probability, a.probability);
}

TEST(Scenarios, InvalidConfigRejected) {
  ExperimentConfig c = build_default_config();
  c.max_photons = 7;
  EXPECT_THROW(run_teleport_scan(c, phase_grid(6, 1.0)), SchemaViolation);
}

}  // namespace
}  // namespace tbrelay
