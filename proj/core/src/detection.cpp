#include "tbrelay/detection.hpp"

#include <algorithm>
#include <cmath>

#include "tbrelay/errors.hpp"
#include "tbrelay/optics.hpp"

namespace tbrelay {

namespace {

constexpr int kMaxEnumeratedGates = 24;

void check_ensemble(const BranchEnsemble& ensemble) {
  double total = 0.0;
  for (const auto& branch : ensemble) {
    if (branch.weight < 0.0) throw UnnormalizedState("negative branch weight");
    if (branch.weight == 0.0) continue;
    total += branch.weight;
    if (std::abs(branch.state.norm_squared() - 1.0) > 1e-9) {
      throw UnnormalizedState("ensemble branch is not normalized");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw UnnormalizedState("ensemble weights sum to " + std::to_string(total));
  }
}

struct GateRef {
  const DetectorChannel* channel;
  int gate;
};

std::vector<GateRef> flatten(const DetectorLayout& layout) {
  std::vector<GateRef> gates;
  for (const auto& ch : layout.channels) {
    for (int g = 0; g < ch.gate_count(); ++g) gates.push_back({&ch, g});
  }
  return gates;
}

// Offset of a channel's first gate in the flattened layout.
int gate_offset(const DetectorLayout& layout, std::string_view label) {
  int offset = 0;
  for (const auto& ch : layout.channels) {
    if (ch.model.label == label) return offset;
    offset += ch.gate_count();
  }
  throw ConfigError("layout has no detector '" + std::string(label) + "'");
}

// P(exactly one click per detector pattern accepted by the psi- rule), given
// independent per-gate click probabilities indexed by absolute bin.
double psi_minus_probability(const std::vector<double>& first, const std::vector<double>& second,
                             const BsaRule& rule) {
  const int window = rule.window_bins;
  auto p_at = [](const std::vector<double>& v, int bin) {
    return bin >= 0 && bin < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(bin)] : 0.0;
  };
  auto none_except = [&](const std::vector<double>& v, int skip) {
    double q = 1.0;
    for (int b = 0; b < window; ++b) {
      if (b != skip) q *= 1.0 - p_at(v, b);
    }
    return q;
  };
  double p = 0.0;
  if (rule.symmetric) {
    for (int t = 0; t < window; ++t) {
      for (int u : {t - 1, t + 1}) {
        if (u < 0 || u >= window) continue;
        p += p_at(first, t) * none_except(first, t) * p_at(second, u) * none_except(second, u);
      }
    }
  } else {
    for (int t = 0; t + 1 < window; ++t) {
      p += p_at(first, t) * none_except(first, t) * p_at(second, t + 1);
    }
  }
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Layout

const DetectorChannel& DetectorLayout::channel(std::string_view label) const {
  for (const auto& ch : channels) {
    if (ch.model.label == label) return ch;
  }
  throw ConfigError("layout has no detector '" + std::string(label) + "'");
}

DetectorChannel& DetectorLayout::channel(std::string_view label) {
  for (auto& ch : channels) {
    if (ch.model.label == label) return ch;
  }
  throw ConfigError("layout has no detector '" + std::string(label) + "'");
}

int DetectorLayout::total_gates() const {
  int n = 0;
  for (const auto& ch : channels) n += ch.gate_count();
  return n;
}

DetectorChannel watch_channel(const ModeRegistry& registry, DetectorModel model, std::string_view spatial,
                              int first_bin, int gates) {
  if (!(model.efficiency >= 0.0 && model.efficiency <= 1.0)) {
    throw ConfigError(model.label + ": efficiency outside [0,1]");
  }
  if (!(model.dark_prob_per_gate >= 0.0 && model.dark_prob_per_gate < 1.0)) {
    throw ConfigError(model.label + ": dark probability outside [0,1)");
  }
  DetectorChannel ch{std::move(model), first_bin, {}};
  ch.gate_modes.resize(static_cast<std::size_t>(gates));
  for (auto m : registry.channel(spatial)) {
    const int bin = registry.key(m).time_bin;
    if (bin >= first_bin && bin < first_bin + gates) {
      ch.gate_modes[static_cast<std::size_t>(bin - first_bin)].push_back(m);
    }
  }
  return ch;
}

// ---------------------------------------------------------------------------
// ClickPattern

ClickPattern::ClickPattern(std::initializer_list<GateId> clicks) {
  for (const auto& g : clicks) set(g, true);
}

void ClickPattern::set(const GateId& gate, bool clicked) {
  auto it = std::lower_bound(clicks_.begin(), clicks_.end(), gate);
  const bool present = it != clicks_.end() && *it == gate;
  if (clicked && !present) clicks_.insert(it, gate);
  if (!clicked && present) clicks_.erase(it);
}

bool ClickPattern::clicked(std::string_view detector, int bin) const {
  return std::any_of(clicks_.begin(), clicks_.end(),
                     [&](const GateId& g) { return g.detector == detector && g.bin == bin; });
}

std::vector<int> ClickPattern::click_bins(std::string_view detector) const {
  std::vector<int> bins;
  for (const auto& g : clicks_) {
    if (g.detector == detector) bins.push_back(g.bin);
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Filters

bool psi_minus_filter(const ClickPattern& pattern, const BsaRule& rule) {
  auto in_window = [&](int b) { return b >= 0 && b < rule.window_bins; };
  std::vector<int> first;
  std::vector<int> second;
  for (int b : pattern.click_bins(rule.first_detector)) {
    if (in_window(b)) first.push_back(b);
  }
  for (int b : pattern.click_bins(rule.second_detector)) {
    if (!in_window(b)) continue;
    // The triggered detector is only read in the bin after a first-detector click.
    if (!rule.symmetric && std::find(first.begin(), first.end(), b - 1) == first.end()) continue;
    second.push_back(b);
  }
  if (first.size() != 1 || second.size() != 1) return false;
  if (rule.symmetric) return std::abs(first[0] - second[0]) == 1;
  return second[0] == first[0] + 1;
}

bool herald_filter(const ClickPattern& pattern, const HeraldRule& rule) {
  if (!rule.enabled) return true;
  return pattern.clicked(rule.detector, rule.bin);
}

// ---------------------------------------------------------------------------
// Probabilities

double gate_click_probability(const DetectorModel& model, int photons) {
  return 1.0 - std::pow(1.0 - model.efficiency, photons) * (1.0 - model.dark_prob_per_gate);
}

std::vector<PatternProbability> click_distribution(const BranchEnsemble& ensemble, const DetectorLayout& layout) {
  check_ensemble(ensemble);
  const auto gates = flatten(layout);
  if (static_cast<int>(gates.size()) > kMaxEnumeratedGates) {
    throw ConfigError("too many gates to enumerate click patterns");
  }
  std::map<std::uint64_t, double> by_mask;
  for (const auto& branch : ensemble) {
    if (branch.weight == 0.0) continue;
    // Efficiency as loss on a private extension of the branch's registry.
    auto registry = std::make_shared<ModeRegistry>(branch.state.registry());
    Circuit fold(registry);
    for (const auto& ch : layout.channels) {
      for (const auto& modes : ch.gate_modes) {
        for (auto m : modes) fold.add(Loss{m, ch.model.efficiency, 0});
      }
    }
    const FockState detected = apply(fold, branch.state);
    for (const auto& [occ, prob] : occupation_distribution(detected)) {
      std::uint64_t photon_mask = 0;
      std::vector<double> dark_p;
      std::vector<int> dark_bits;
      for (std::size_t g = 0; g < gates.size(); ++g) {
        int n = 0;
        for (auto m : gates[g].channel->gate_modes[static_cast<std::size_t>(gates[g].gate)]) {
          if (m < occ.size()) n += occ[m];
        }
        if (n > 0) {
          photon_mask |= std::uint64_t{1} << g;
        } else {
          dark_p.push_back(gates[g].channel->model.dark_prob_per_gate);
          dark_bits.push_back(static_cast<int>(g));
        }
      }
      const std::size_t subsets = std::size_t{1} << dark_p.size();
      for (std::size_t s = 0; s < subsets; ++s) {
        double p = branch.weight * prob;
        std::uint64_t mask = photon_mask;
        for (std::size_t k = 0; k < dark_p.size(); ++k) {
          if (s >> k & 1) {
            p *= dark_p[k];
            mask |= std::uint64_t{1} << dark_bits[k];
          } else {
            p *= 1.0 - dark_p[k];
          }
        }
        if (p != 0.0) by_mask[mask] += p;
      }
    }
  }
  std::vector<PatternProbability> out;
  out.reserve(by_mask.size());
  for (const auto& [mask, p] : by_mask) {
    ClickPattern pattern;
    for (std::size_t g = 0; g < gates.size(); ++g) {
      if (mask >> g & 1) {
        pattern.set({gates[g].channel->model.label, gates[g].channel->first_bin + gates[g].gate}, true);
      }
    }
    out.push_back({std::move(pattern), p});
  }
  return out;
}

GateCounts gate_count_distribution(const FockState& state, const DetectorLayout& layout) {
  const auto gates = flatten(layout);
  GateCounts out;
  std::vector<std::uint8_t> key(gates.size());
  for (const auto& t : state.terms()) {
    for (std::size_t g = 0; g < gates.size(); ++g) {
      int n = 0;
      for (auto m : gates[g].channel->gate_modes[static_cast<std::size_t>(gates[g].gate)]) {
        if (m < t.occupation.size()) n += t.occupation[m];
      }
      key[g] = static_cast<std::uint8_t>(n);
    }
    out[key] += std::norm(t.amplitude);
  }
  return out;
}

TeleportOutcome teleport_outcome_from_counts(const std::vector<std::pair<double, const GateCounts*>>& branches,
                                             const TeleportDetection& detection) {
  const auto& layout = detection.layout;
  const auto& first = layout.channel(detection.bsa.first_detector);
  const auto& second = layout.channel(detection.bsa.second_detector);
  const auto& bob = layout.channel(detection.bob_detector);
  const int first_off = gate_offset(layout, first.model.label);
  const int second_off = gate_offset(layout, second.model.label);
  const int bob_off = gate_offset(layout, bob.model.label);
  const DetectorChannel* herald = nullptr;
  int herald_off = 0;
  if (detection.herald.enabled) {
    herald = &layout.channel(detection.herald.detector);
    herald_off = gate_offset(layout, herald->model.label);
  }

  // Click probabilities indexed by absolute bin.
  auto bin_probs = [](const DetectorChannel& ch, int offset, const std::vector<std::uint8_t>& counts) {
    std::vector<double> p(static_cast<std::size_t>(ch.first_bin + ch.gate_count()), 0.0);
    for (int g = 0; g < ch.gate_count(); ++g) {
      p[static_cast<std::size_t>(ch.first_bin + g)] =
          gate_click_probability(ch.model, counts[static_cast<std::size_t>(offset + g)]);
    }
    return p;
  };

  TeleportOutcome out;
  for (const auto& [weight, counts] : branches) {
    if (weight == 0.0) continue;
    for (const auto& [key, prob] : *counts) {
      const double psi = psi_minus_probability(bin_probs(first, first_off, key),
                                               bin_probs(second, second_off, key), detection.bsa);
      if (psi == 0.0) continue;
      double herald_p = 1.0;
      if (herald) {
        const int g = detection.herald.bin - herald->first_bin;
        if (g < 0 || g >= herald->gate_count()) throw ConfigError("herald bin outside the herald gates");
        herald_p = gate_click_probability(herald->model, key[static_cast<std::size_t>(herald_off + g)]);
      }
      const double w = weight * prob;
      out.psi_minus += w * psi;
      out.psi_minus_and_herald += w * psi * herald_p;
      for (int b = 0; b < 3; ++b) {
        const int g = b - bob.first_bin;
        if (g < 0 || g >= bob.gate_count()) continue;
        out.bob_bin[static_cast<std::size_t>(b)] +=
            w * psi * herald_p * gate_click_probability(bob.model, key[static_cast<std::size_t>(bob_off + g)]);
      }
    }
  }
  return out;
}

TeleportOutcome teleport_outcome_distribution(const BranchEnsemble& ensemble, const TeleportDetection& detection) {
  check_ensemble(ensemble);
  std::vector<GateCounts> counts;
  counts.reserve(ensemble.size());
  for (const auto& branch : ensemble) counts.push_back(gate_count_distribution(branch.state, detection.layout));
  std::vector<std::pair<double, const GateCounts*>> refs;
  for (std::size_t i = 0; i < ensemble.size(); ++i) refs.emplace_back(ensemble[i].weight, &counts[i]);
  return teleport_outcome_from_counts(refs, detection);
}

double validate_timing(const TimingBudget& budget) {
  for (double len : {budget.alice_spool, budget.charlie_spool, budget.quantum_fiber, budget.classical_fiber,
                     budget.bob_spool}) {
    if (!(len >= 0.0)) throw ConfigError("fiber lengths must be non-negative");
  }
  const double per_meter = budget.group_index / kSpeedOfLight;
  // Bob's photon leaves the lab at the pair emission; the Bell measurement
  // happens once Charlie's photon has crossed its storage spool.
  const double photon_arrival = (budget.quantum_fiber + budget.bob_spool) * per_meter;
  const double trigger_arrival =
      budget.charlie_spool * per_meter + budget.bsa_latency + budget.classical_fiber * per_meter;
  return photon_arrival - trigger_arrival;
}

}  // namespace tbrelay
