#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tbrelay/fock.hpp"

namespace tbrelay {

inline const std::string kGeBsa = "Ge-BSA";
inline const std::string kInGaAsBsa = "InGaAs-BSA";
inline const std::string kHeraldDetector = "InGaAs-herald";
inline const std::string kBobDetector = "InGaAs-Bob";

/// Threshold (non-number-resolving) detector.
struct DetectorModel {
  std::string label;
  double efficiency = 1.0;
  double dark_prob_per_gate = 0.0;
  bool gated = false;
  // false for placeholder parameters that were not fitted to data
  bool calibrated = true;
};

/// A detector and the registry modes it integrates in each of its gates.
/// Gate g covers time bin first_bin + g and sums photons over its modes
/// (all internal labels of the watched channel).
struct DetectorChannel {
  DetectorModel model;
  int first_bin = 0;
  std::vector<std::vector<std::size_t>> gate_modes;

  int gate_count() const { return static_cast<int>(gate_modes.size()); }
};

struct DetectorLayout {
  std::vector<DetectorChannel> channels;

  const DetectorChannel& channel(std::string_view label) const;
  DetectorChannel& channel(std::string_view label);
  int total_gates() const;
};

/// Builds a channel watching `spatial` over bins [first_bin, first_bin + gates).
DetectorChannel watch_channel(const ModeRegistry& registry, DetectorModel model, std::string_view spatial,
                              int first_bin, int gates);

struct GateId {
  std::string detector;
  int bin = 0;
  auto operator<=>(const GateId&) const = default;
};

/// Clicks registered during one laser-clock window.
class ClickPattern {
 public:
  ClickPattern() = default;
  ClickPattern(std::initializer_list<GateId> clicks);

  void set(const GateId& gate, bool clicked);
  bool clicked(std::string_view detector, int bin) const;
  std::vector<int> click_bins(std::string_view detector) const;
  const std::vector<GateId>& clicks() const noexcept { return clicks_; }
  bool operator==(const ClickPattern&) const = default;

 private:
  std::vector<GateId> clicks_;  // sorted, unique
};

struct WeightedState {
  double weight = 1.0;
  FockState state;
};
using BranchEnsemble = std::vector<WeightedState>;

struct PatternProbability {
  ClickPattern pattern;
  double probability = 0.0;
};

/// Full click-pattern distribution. Efficiency is folded in as a Loss on
/// every watched mode, outcomes are thresholded, then dark counts are ORed
/// in per gate. Throws UnnormalizedState if branch weights or states are
/// not normalized.
std::vector<PatternProbability> click_distribution(const BranchEnsemble& ensemble, const DetectorLayout& layout);

/// Two-photon Bell-analyzer acceptance rule.
struct BsaRule {
  std::string first_detector = kGeBsa;
  std::string second_detector = kInGaAsBsa;
  // false: the second detector is only read in the bin after a first-detector click
  bool symmetric = false;
  // clock window: bins 0 .. window_bins-1 are considered
  int window_bins = 3;
};

bool psi_minus_filter(const ClickPattern& pattern, const BsaRule& rule = {});

struct HeraldRule {
  std::string detector = kHeraldDetector;
  int bin = 0;
  bool enabled = true;
};

bool herald_filter(const ClickPattern& pattern, const HeraldRule& rule = {});

/// Detection chain of a teleportation run.
struct TeleportDetection {
  DetectorLayout layout;
  BsaRule bsa;
  HeraldRule herald;
  std::string bob_detector = kBobDetector;
};

/// Joint probabilities of a teleportation run. Bob's entries are
/// P(psi- and herald and Bob clicks in bin b).
struct TeleportOutcome {
  double psi_minus = 0.0;
  double psi_minus_and_herald = 0.0;
  std::array<double, 3> bob_bin{};
};

/// Photon numbers per gate (layout order, channel by channel) and their probability.
using GateCounts = std::map<std::vector<std::uint8_t>, double>;

GateCounts gate_count_distribution(const FockState& state, const DetectorLayout& layout);

/// Per-gate click probability for n photons: 1 - (1-eta)^n (1-d).
double gate_click_probability(const DetectorModel& model, int photons);

TeleportOutcome teleport_outcome_from_counts(const std::vector<std::pair<double, const GateCounts*>>& branches,
                                             const TeleportDetection& detection);

/// Closed-form route: joint psi-/herald/Bob probabilities of an ensemble.
TeleportOutcome teleport_outcome_distribution(const BranchEnsemble& ensemble, const TeleportDetection& detection);

/// Fiber lengths and latencies of the relay link.
struct TimingBudget {
  double alice_spool = 177.0;       // m
  double charlie_spool = 179.72;    // m
  double quantum_fiber = 800.0;     // m, lab to Bob
  double classical_fiber = 800.0;   // m, lab to Bob
  double bob_spool = 250.0;         // m
  double group_index = 1.468;
  double bsa_latency = 220e-9;      // s
};

inline constexpr double kSpeedOfLight = 299792458.0;

/// Photon arrival at Bob's detector minus arrival of the classical trigger.
/// Positive slack means the gate opens in time.
double validate_timing(const TimingBudget& budget);

}  // namespace tbrelay
