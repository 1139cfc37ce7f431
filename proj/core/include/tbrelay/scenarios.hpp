#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tbrelay/detection.hpp"
#include "tbrelay/optics.hpp"
#include "tbrelay/sources.hpp"
#include "tbrelay/stability.hpp"

namespace tbrelay {

enum class EvaluationMode { analytic, montecarlo };
enum class Blocked { none, alice, epr, both };

/// Per-gate dark probability shipped in the defaults. Fitted with
/// calibrate_dark_counts on the default 3-photon setup at max_photons = 6
/// (background = signal); not a measured detector property.
inline constexpr double kDefaultDarkProb = 7.14148918e-4;

struct DetectorSet {
  DetectorModel ge{kGeBsa, 0.1, 0.0, false, false};
  DetectorModel ingaas_bsa{kInGaAsBsa, 0.1, 0.0, true, false};
  DetectorModel herald{kHeraldDetector, 0.1, 0.0, true, false};
  DetectorModel bob{kBobDetector, 0.1, 0.0, true, false};
};

struct ExperimentConfig {
  int max_photons = kDefaultMaxPhotons;
  int max_bins = kDefaultMaxBins;

  // Source brightness per pulse. pair_mean_common overrides both when set.
  double pair_mean_alice = 0.19;
  double pair_mean_epr = 0.07;
  std::optional<double> pair_mean_common;
  PairStatistics statistics = PairStatistics::thermal;
  // true: the pair_mean_* values are P(n >= 1) and get converted to means
  bool pair_mean_is_probability = false;
  bool heralded = false;
  // Exactly one pair from each source (ideal-component studies).
  bool single_pairs = false;
  // Largest dropped branch mass tolerated by the joint pair-number cut.
  double max_truncated_mass = 1e-2;

  double phase_pump = 0.0;
  double phase_alice = 0.0;
  double phase_bob = 0.0;
  double delta_x = 0.0;  // m
  OverlapModel overlap{};

  double loss_alice_db = 0.0;
  double loss_charlie_db = 0.0;
  double loss_bob_db = 2.0;
  double loss_herald_db = 0.0;

  DetectorSet detectors{};
  bool symmetric_bsa = false;
  int bsa_window_bins = 3;

  double rep_rate = 75e6;   // Hz
  double bin_pitch = 1.2e-9;  // s
  std::optional<std::int64_t> pulses_per_point;
  double integration_minutes = 53.0;

  EvaluationMode mode = EvaluationMode::analytic;
  std::int64_t trials = 1'000'000;
  std::uint64_t seed = 12345;

  TimingBudget timing{};
  DriftModel drift{};
  Controller controller{};
  StabilityOptions stability{};

  double mean_alice() const;
  double mean_epr() const;
  /// Pulses integrated per scan point.
  double pulses() const;
  void validate() const;
};

/// Reference setup. Detector efficiencies and dark counts are placeholders
/// (`calibrated = false`); the dark counts come from calibrate_dark_counts.
ExperimentConfig build_default_config();

struct ScanResult {
  std::vector<double> control;      // phase (rad) or mismatch (m)
  std::vector<double> counts;       // expected (analytic) or Poisson-drawn (Monte-Carlo)
  std::vector<double> probability;  // per-pulse event probability (estimate in Monte-Carlo mode)
  std::vector<double> std_error;    // Monte-Carlo standard error of `probability`; 0 in analytic mode
  double pulses = 0.0;
  double truncated_mass = 0.0;
};

struct MandelResult {
  ScanResult short_path;  // bin 0 coincidences
  ScanResult long_path;   // bin 1 coincidences
};

MandelResult run_mandel_scan(const ExperimentConfig& config, std::span<const double> delta_x);

/// Bob central-bin coincidences conditioned on psi- (and the herald when enabled).
ScanResult run_teleport_scan(const ExperimentConfig& config, std::span<const double> phi_b);

/// `points` phases covering `periods` full periods, endpoint excluded.
std::vector<double> phase_grid(int points, double periods);

/// Phase-averaged psi- and Bob coincidence probability per pulse with the
/// blocked sources' means forced to zero.
double run_blocking(const ExperimentConfig& config, Blocked blocked);

struct NoiseBudget {
  double fringe_mean = 0.0;       // probability per pulse, phase averaged
  double background_alice = 0.0;  // alice blocked
  double background_epr = 0.0;    // epr blocked
  double background_both = 0.0;
  double background = 0.0;        // alice + epr - both
  double signal() const { return fringe_mean - background; }
};

NoiseBudget noise_budget(const ExperimentConfig& config);

struct Calibration {
  double dark_prob = 0.0;  // common per-gate dark probability
  NoiseBudget budget;
  int iterations = 0;
};

/// Fits one dark-count probability shared by all detectors so that
/// background / signal equals `target_ratio`.
Calibration calibrate_dark_counts(const ExperimentConfig& config, double target_ratio = 1.0);

/// Copy of `config` with every detector's dark probability set to `dark_prob`.
ExperimentConfig with_dark_counts(ExperimentConfig config, double dark_prob);

/// P(psi-) for one pair from each source with ideal detection, counting only
/// events where Alice's photon leaves her interferometer through the output port.
double ideal_bsa_success_probability(const ExperimentConfig& config);

/// One (alice pairs, epr pairs) term of the source mixture.
struct PairBranch {
  int alice = 0;
  int epr = 0;
  double weight = 0.0;
};

/// Branches kept by the joint cut 2 (alice + epr) <= max_photons.
struct BranchSet {
  std::vector<PairBranch> branches;  // weights renormalized over the kept branches
  double truncated_mass = 0.0;
};

BranchSet pair_branches(const ExperimentConfig& config, double mean_alice, double mean_epr);

/// Full teleportation circuit with per-branch photon-count tables cached per
/// Bob phase, so detector parameters and source weights can be changed cheaply.
class TeleportModel {
 public:
  explicit TeleportModel(const ExperimentConfig& config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const BranchSet& branches() const noexcept { return branches_; }
  const DetectorLayout& photon_layout() const noexcept { return layout_; }

  /// Detection chain with losses folded into the detector efficiencies.
  TeleportDetection detection(const DetectorSet& detectors) const;

  /// Per-branch photon-count tables at Bob phase phi_b (cached).
  const std::vector<GateCounts>& counts_at(double phi_b);

  /// Outcome for arbitrary branch weights (aligned with branches()).
  TeleportOutcome outcome(double phi_b, std::span<const double> weights, const DetectorSet& detectors);
  std::vector<double> blocked_weights(Blocked blocked) const;

  /// Normalized state of one branch before Bob's analyzer.
  const FockState& pre_bob_state(std::size_t branch) const { return pre_bob_[branch]; }

 private:
  ExperimentConfig config_;
  std::shared_ptr<ModeRegistry> registry_;
  BranchSet branches_;
  std::vector<FockState> pre_bob_;
  Circuit bob_;
  DetectorLayout layout_;
  std::deque<std::pair<double, std::vector<GateCounts>>> cache_;
};

}  // namespace tbrelay
