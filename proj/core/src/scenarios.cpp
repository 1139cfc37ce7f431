#include "tbrelay/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "tbrelay/errors.hpp"
#include "tbrelay/rng.hpp"

namespace tbrelay {

namespace {

const std::string kAlice1310 = "alice-1310";
const std::string kAlice1555 = "alice-1555";
const std::string kCharlie1310 = "charlie-1310";
const std::string kBob1555 = "bob-1555";

constexpr int kBobGates = 3;
constexpr int kAnalyzedBin = 1;
constexpr int kBackgroundPhases = 8;

struct Setup {
  Circuit alice_mzi;
  Circuit front;  // segment losses and the Bell-analyzer coupler
  Circuit bob;    // Bob's analyzer at zero phase
  std::string alice_arm;
  DetectorLayout layout;  // Ge, InGaAs, herald, Bob
};

SpdcSource alice_source(const ExperimentConfig& c, double mean) {
  SpdcSource s;
  s.mean_pairs = mean;
  s.statistics = c.statistics;
  s.signal_channel = kAlice1310;
  s.idler_channel = kAlice1555;
  return s;
}

SpdcSource epr_source(const ExperimentConfig& c, double mean) {
  SpdcSource s;
  s.mean_pairs = mean;
  s.statistics = c.statistics;
  s.signal_channel = kCharlie1310;
  s.idler_channel = kBob1555;
  s.pump_phase = c.phase_pump;
  return s;
}

Setup build_setup(const ExperimentConfig& c, const std::shared_ptr<ModeRegistry>& reg) {
  for (int l : {0, 1}) reg->add({kAlice1310, 0, l});
  reg->add({kAlice1555, 0, 0});
  for (int b : {0, 1}) {
    for (int l : {0, 1}) reg->add({kCharlie1310, b, l});
  }
  for (int b : {0, 1}) reg->add({kBob1555, b, 0});

  const int labels[] = {0, 1};
  const int first_bin[] = {0};
  const int both_bins[] = {0, 1};
  const int reference[] = {0};

  Setup s{build_michelson(reg, kAlice1310, c.phase_alice, first_bin, labels), Circuit(reg), Circuit(reg), {}, {}};
  s.alice_arm = reg->key(std::get<BeamSplitter>(s.alice_mzi.elements().front()).mode_b).spatial;

  for (const auto& [channel, db] : {std::pair{kAlice1310, c.loss_alice_db}, std::pair{kCharlie1310, c.loss_charlie_db}}) {
    if (transmission_from_db(db) == 1.0) continue;
    for (auto m : reg->channel(channel)) s.front.add(loss_from_db(m, db));
  }
  for (int b : {0, 1}) {
    for (int l : {0, 1}) {
      s.front.add(BeamSplitter{reg->index({kAlice1310, b, l}), reg->index({kCharlie1310, b, l}), 0.5});
    }
  }
  s.bob = build_michelson(reg, kBob1555, 0.0, both_bins, reference);

  const int window = c.bsa_window_bins;
  s.layout.channels.push_back(watch_channel(*reg, c.detectors.ge, kAlice1310, 0, window));
  s.layout.channels.push_back(watch_channel(*reg, c.detectors.ingaas_bsa, kCharlie1310, 0, window));
  s.layout.channels.push_back(watch_channel(*reg, c.detectors.herald, kAlice1555, 0, 1));
  s.layout.channels.push_back(watch_channel(*reg, c.detectors.bob, kBob1555, 0, kBobGates));
  return s;
}

FockState source_state(const std::shared_ptr<ModeRegistry>& reg, const ExperimentConfig& c, int n_alice, int n_epr,
                       double xi) {
  const FockState a = emit_alice(reg, alice_source(c, c.mean_alice()), n_alice, xi, c.max_photons);
  const FockState e = emit_entangled(reg, epr_source(c, c.mean_epr()), n_epr, c.max_photons);
  return tensor(a, e);
}

Circuit with_phase(const Circuit& base, double phase) {
  Circuit out(base.registry());
  for (Element e : base.elements()) {
    if (auto* p = std::get_if<PhaseShift>(&e)) p->phase += phase;
    out.add(std::move(e));
  }
  return out;
}

// Losses right in front of a detector are folded into its efficiency.
DetectorLayout detection_layout(const DetectorLayout& base, const ExperimentConfig& c, const DetectorSet& d) {
  DetectorLayout layout = base;
  auto assign = [&](const DetectorModel& m, double db) {
    for (auto& ch : layout.channels) {
      if (ch.model.label != m.label) continue;
      ch.model = m;
      ch.model.efficiency *= transmission_from_db(db);
    }
  };
  assign(d.ge, 0.0);
  assign(d.ingaas_bsa, 0.0);
  assign(d.herald, c.loss_herald_db);
  assign(d.bob, c.loss_bob_db);
  return layout;
}

std::vector<double> weights_of(const BranchSet& set) {
  std::vector<double> w;
  for (const auto& b : set.branches) w.push_back(b.weight);
  return w;
}

// ---------------------------------------------------------------------------
// Monte-Carlo

struct Stratum {
  double weight = 0.0;
  const GateCounts* counts = nullptr;
  std::vector<double> analytic;  // exact per-event probability within the stratum
};

struct Estimate {
  double probability = 0.0;
  double std_error = 0.0;
};

using EventFn = std::function<unsigned(const ClickPattern&)>;

// Neyman allocation on the first event: trials proportional to
// w sqrt(p (1 - p)), plus a floor of a tenth of an equal share so strata
// the analytic route calls empty are still sampled.
std::vector<std::int64_t> allocate_trials(const std::vector<Stratum>& strata, std::int64_t trials) {
  std::vector<std::int64_t> out(strata.size(), 0);
  std::int64_t active = 0;
  double total = 0.0;
  for (const auto& s : strata) {
    if (s.weight <= 0.0) continue;
    ++active;
    const double p = s.analytic.front();
    total += s.weight * std::sqrt(p * (1.0 - p));
  }
  if (active == 0) return out;
  const std::int64_t floor = std::max<std::int64_t>(1, trials / (10 * active));
  const auto rest = static_cast<double>(std::max<std::int64_t>(0, trials - floor * active));
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const Stratum& s = strata[k];
    if (s.weight <= 0.0) continue;
    const double p = s.analytic.front();
    const double share = total > 0.0 ? s.weight * std::sqrt(p * (1.0 - p)) / total : 1.0 / static_cast<double>(active);
    out[k] = floor + static_cast<std::int64_t>(std::floor(rest * share));
  }
  return out;
}

// Stratified by source branch. Within a trial the photon numbers per gate
// are drawn from the branch's exact table, then each gate's photon click and
// dark count are independent Bernoulli draws, and the click pattern goes through
// `events`. Standard errors are the empirical ones of the weighted draws.
std::vector<Estimate> sample_events(const std::vector<Stratum>& strata, const DetectorLayout& layout, int n_events,
                                    const EventFn& events, std::uint64_t seed, std::uint64_t point,
                                    std::int64_t trials) {
  // Detections and dark counts are drawn with boosted probabilities and the
  // trial is reweighted by the likelihood ratio; the events of interest need
  // several rare clicks at once. Photons are drawn per gate, not per photon,
  // so a gate holding n photons costs at most 2 in the weight when it stays
  // dark. Pure dark-count strata need two dark clicks together, hence the
  // 0.05 floor.
  struct Gate {
    const DetectorModel* model;
    int bin;
    double eta;
    bool boost_eta;
    double dark, q_dark;
  };
  std::vector<Gate> gates;
  for (const auto& ch : layout.channels) {
    const double eta = ch.model.efficiency;
    const double dark = ch.model.dark_prob_per_gate;
    const bool boost_eta = eta > 0.0 && eta < 1.0;
    const double q_dark = dark > 0.0 ? std::max(dark, 0.05) : 0.0;
    for (int g = 0; g < ch.gate_count(); ++g) gates.push_back({&ch.model, ch.first_bin + g, eta, boost_eta, dark, q_dark});
  }
  auto draw = [](SplitMix64& rng, double p, double q, double& ratio) {
    const bool hit = rng.uniform() < q;
    ratio *= hit ? p / q : (1.0 - p) / (1.0 - q);
    return hit;
  };

  std::vector<Estimate> out(static_cast<std::size_t>(n_events));
  const auto allocation = allocate_trials(strata, trials);
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const Stratum& s = strata[k];
    const std::int64_t per = allocation[k];
    if (per == 0) continue;
    std::vector<const std::vector<std::uint8_t>*> keys;
    std::vector<double> cdf;
    double total = 0.0;
    for (const auto& [key, p] : *s.counts) {
      total += p;
      keys.push_back(&key);
      cdf.push_back(total);
    }
    std::vector<double> sum(static_cast<std::size_t>(n_events), 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(n_events), 0.0);
    for (std::int64_t t = 0; t < per; ++t) {
      SplitMix64 rng(counter_key(seed, point, k, static_cast<std::uint64_t>(t)));
      const double u = rng.uniform() * total;
      const auto idx = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), keys.size() - 1);
      const auto& photons = *keys[idx];
      double ratio = 1.0;
      ClickPattern pattern;
      for (std::size_t g = 0; g < gates.size(); ++g) {
        const Gate& gate = gates[g];
        bool click = false;
        if (photons[g] > 0) {
          // a threshold gate only sees whether any of its photons fired
          const double p = 1.0 - std::pow(1.0 - gate.eta, photons[g]);
          click = draw(rng, p, gate.boost_eta ? std::max(p, 0.5) : p, ratio);
        }
        click = draw(rng, gate.dark, gate.q_dark, ratio) || click;
        if (click) pattern.set({gate.model->label, gate.bin}, true);
      }
      const unsigned mask = events(pattern);
      for (int e = 0; e < n_events; ++e) {
        if (mask >> e & 1U) {
          sum[static_cast<std::size_t>(e)] += ratio;
          sum_sq[static_cast<std::size_t>(e)] += ratio * ratio;
        }
      }
    }
    const auto n = static_cast<double>(per);
    for (std::size_t e = 0; e < out.size(); ++e) {
      const double mean = sum[e] / n;
      const double var = n > 1.0 ? std::max(0.0, (sum_sq[e] / n - mean * mean) * n / (n - 1.0)) : 0.0;
      out[e].probability += s.weight * mean;
      out[e].std_error += s.weight * s.weight * var / n;
    }
  }
  for (auto& e : out) e.std_error = std::sqrt(e.std_error);
  return out;
}

double poisson_count(double mean, std::uint64_t seed, std::uint64_t point) {
  if (!(mean > 0.0)) return 0.0;
  SplitMix64 rng(counter_key(seed, point, 0xC0C0ULL, 0xC0C0ULL));
  std::poisson_distribution<long long> poisson(mean);
  return static_cast<double>(poisson(rng));
}

// Same-bin BSA coincidence probability per bin (0, 1), herald optional.
std::array<double, 2> mandel_coincidence(const GateCounts& counts, const DetectorLayout& layout, bool heralded) {
  const auto& ge = layout.channels[0];
  const auto& in = layout.channels[1];
  const auto& herald = layout.channels[2];
  const auto window = static_cast<std::size_t>(ge.gate_count());
  std::array<double, 2> out{};
  for (const auto& [key, p] : counts) {
    const double h = heralded ? gate_click_probability(herald.model, key[2 * window]) : 1.0;
    for (std::size_t b = 0; b < 2 && b < window; ++b) {
      out[b] += p * h * gate_click_probability(ge.model, key[b]) * gate_click_probability(in.model, key[window + b]);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

double ExperimentConfig::mean_alice() const {
  const double v = pair_mean_common.value_or(pair_mean_alice);
  return pair_mean_is_probability ? mean_from_pair_probability(statistics, v) : v;
}

double ExperimentConfig::mean_epr() const {
  const double v = pair_mean_common.value_or(pair_mean_epr);
  return pair_mean_is_probability ? mean_from_pair_probability(statistics, v) : v;
}

double ExperimentConfig::pulses() const {
  if (pulses_per_point) return static_cast<double>(*pulses_per_point);
  return std::round(integration_minutes * 60.0 * rep_rate);
}

void ExperimentConfig::validate() const {
  if (max_photons < 2 || max_photons > kMaxPhotonsLimit) {
    throw SchemaViolation("max_photons", "expected an integer in [2, " + std::to_string(kMaxPhotonsLimit) + "]");
  }
  if (max_bins < 3) throw SchemaViolation("max_bins", "expected an integer >= 3");
  for (const auto& [key, v] : {std::pair{"pair_mean_alice", pair_mean_alice}, std::pair{"pair_mean_epr", pair_mean_epr},
                               std::pair{"pair_mean_common", pair_mean_common.value_or(0.0)}}) {
    if (!(v >= 0.0)) throw SchemaViolation(key, "expected a non-negative number");
    if (pair_mean_is_probability && !(v < 1.0)) throw SchemaViolation(key, "a pair probability must be below 1");
  }
  if (!(max_truncated_mass >= 0.0 && max_truncated_mass < 1.0)) {
    throw SchemaViolation("max_truncated_mass", "expected a number in [0, 1)");
  }
  if (!(delta_x == delta_x)) throw SchemaViolation("delta_x_um", "expected a number");
  if (!(overlap.dip_fwhm > 0.0)) throw SchemaViolation("dip_fwhm_um", "expected a positive number");
  for (const auto& [key, v] : {std::pair{"loss_alice_db", loss_alice_db}, std::pair{"loss_charlie_db", loss_charlie_db},
                               std::pair{"loss_bob_db", loss_bob_db}, std::pair{"loss_herald_db", loss_herald_db}}) {
    if (!(v >= 0.0)) throw SchemaViolation(key, "expected a non-negative number of dB");
  }
  for (const auto& [key, m] : {std::pair{"ge", &detectors.ge}, std::pair{"ingaas_bsa", &detectors.ingaas_bsa},
                               std::pair{"herald", &detectors.herald}, std::pair{"bob", &detectors.bob}}) {
    if (!(m->efficiency >= 0.0 && m->efficiency <= 1.0)) {
      throw SchemaViolation(std::string("eta_") + key, "expected a number in [0, 1]");
    }
    if (!(m->dark_prob_per_gate >= 0.0 && m->dark_prob_per_gate < 1.0)) {
      throw SchemaViolation(std::string("dark_") + key, "expected a number in [0, 1)");
    }
  }
  if (bsa_window_bins < 2 || bsa_window_bins > max_bins) {
    throw SchemaViolation("bsa_window_bins", "expected an integer in [2, max_bins]");
  }
  if (!(rep_rate > 0.0)) throw SchemaViolation("rep_rate_hz", "expected a positive number");
  if (!(bin_pitch > 0.0)) throw SchemaViolation("bin_pitch_ns", "expected a positive number");
  if (pulses_per_point && *pulses_per_point < 1) throw SchemaViolation("pulses_per_point", "expected an integer >= 1");
  if (!(integration_minutes > 0.0)) throw SchemaViolation("integration_minutes", "expected a positive number");
  if (trials < 1) throw SchemaViolation("trials", "expected an integer >= 1");
}

ExperimentConfig build_default_config() {
  ExperimentConfig c;
  for (DetectorModel* m : {&c.detectors.ge, &c.detectors.ingaas_bsa, &c.detectors.herald, &c.detectors.bob}) {
    m->dark_prob_per_gate = kDefaultDarkProb;
  }
  return c;
}

ExperimentConfig with_dark_counts(ExperimentConfig config, double dark_prob) {
  for (DetectorModel* m : {&config.detectors.ge, &config.detectors.ingaas_bsa, &config.detectors.herald,
                           &config.detectors.bob}) {
    m->dark_prob_per_gate = dark_prob;
  }
  return config;
}

BranchSet pair_branches(const ExperimentConfig& config, double mean_alice, double mean_epr) {
  BranchSet out;
  if (config.single_pairs) {
    const bool both = mean_alice > 0.0 && mean_epr > 0.0;
    out.branches.push_back({1, 1, both ? 1.0 : 0.0});
    return out;
  }
  const int cut = config.max_photons / 2;
  const auto epr = two_pulse_pair_distribution(epr_source(config, mean_epr), cut);
  double kept = 0.0;
  for (int a = 0; a <= cut; ++a) {
    const double pa = pair_probability(config.statistics, mean_alice, a);
    for (int e = 0; a + e <= cut; ++e) {
      const double w = pa * epr[static_cast<std::size_t>(e)];
      out.branches.push_back({a, e, w});
      kept += w;
    }
  }
  out.truncated_mass = std::max(0.0, 1.0 - kept);
  if (out.truncated_mass > config.max_truncated_mass) {
    throw TailMassTooLarge("pair branches beyond " + std::to_string(cut) + " pairs carry " +
                           std::to_string(out.truncated_mass) + " of the probability (limit " +
                           std::to_string(config.max_truncated_mass) + "); raise max_photons or lower the means");
  }
  for (auto& b : out.branches) b.weight /= kept;
  return out;
}

std::vector<double> phase_grid(int points, double periods) {
  if (points < 1) throw ConfigError("phase grid needs at least one point");
  if (!(periods > 0.0)) throw ConfigError("phase grid needs a positive number of periods");
  std::vector<double> x(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    x[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * periods * i / points;
  }
  return x;
}

// ---------------------------------------------------------------------------
// TeleportModel

TeleportModel::TeleportModel(const ExperimentConfig& config)
    : config_(config), registry_(std::make_shared<ModeRegistry>(config.max_bins)), bob_(registry_) {
  config_.validate();
  Setup s = build_setup(config_, registry_);
  bob_ = s.bob;
  layout_ = s.layout;
  branches_ = pair_branches(config_, config_.mean_alice(), config_.mean_epr());
  const double xi = overlap_from_mismatch(config_.delta_x, config_.overlap);
  for (const auto& b : branches_.branches) {
    const FockState state = source_state(registry_, config_, b.alice, b.epr, xi);
    pre_bob_.push_back(apply(s.front, apply(s.alice_mzi, state)));
  }
}

TeleportDetection TeleportModel::detection(const DetectorSet& detectors) const {
  TeleportDetection d;
  d.layout = detection_layout(layout_, config_, detectors);
  d.bsa = BsaRule{kGeBsa, kInGaAsBsa, config_.symmetric_bsa, config_.bsa_window_bins};
  d.herald = HeraldRule{kHeraldDetector, 0, config_.heralded};
  d.bob_detector = kBobDetector;
  return d;
}

const std::vector<GateCounts>& TeleportModel::counts_at(double phi_b) {
  for (const auto& [phase, counts] : cache_) {
    if (phase == phi_b) return counts;
  }
  const Circuit bob = with_phase(bob_, config_.phase_bob + phi_b);
  std::vector<GateCounts> counts;
  counts.reserve(pre_bob_.size());
  for (const auto& state : pre_bob_) counts.push_back(gate_count_distribution(apply(bob, state), layout_));
  cache_.emplace_back(phi_b, std::move(counts));
  return cache_.back().second;
}

TeleportOutcome TeleportModel::outcome(double phi_b, std::span<const double> weights, const DetectorSet& detectors) {
  const auto& counts = counts_at(phi_b);
  if (weights.size() != counts.size()) throw DimensionMismatch("one weight per branch expected");
  std::vector<std::pair<double, const GateCounts*>> refs;
  for (std::size_t i = 0; i < counts.size(); ++i) refs.emplace_back(weights[i], &counts[i]);
  return teleport_outcome_from_counts(refs, detection(detectors));
}

std::vector<double> TeleportModel::blocked_weights(Blocked blocked) const {
  const bool alice_on = blocked == Blocked::none || blocked == Blocked::epr;
  const bool epr_on = blocked == Blocked::none || blocked == Blocked::alice;
  return weights_of(pair_branches(config_, alice_on ? config_.mean_alice() : 0.0, epr_on ? config_.mean_epr() : 0.0));
}

// ---------------------------------------------------------------------------
// Campaigns

ScanResult run_teleport_scan(const ExperimentConfig& config, std::span<const double> phi_b) {
  TeleportModel model(config);
  const auto weights = weights_of(model.branches());
  ScanResult out;
  out.pulses = config.pulses();
  out.truncated_mass = model.branches().truncated_mass;
  const TeleportDetection det = model.detection(config.detectors);
  for (std::size_t i = 0; i < phi_b.size(); ++i) {
    const double phi = phi_b[i];
    double p = 0.0;
    double se = 0.0;
    if (config.mode == EvaluationMode::analytic) {
      p = model.outcome(phi, weights, config.detectors).bob_bin[kAnalyzedBin];
    } else {
      const auto& counts = model.counts_at(phi);
      std::vector<Stratum> strata;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        const double pk = teleport_outcome_from_counts({{1.0, &counts[k]}}, det).bob_bin[kAnalyzedBin];
        strata.push_back({weights[k], &counts[k], {pk}});
      }
      const EventFn event = [&det](const ClickPattern& c) -> unsigned {
        return psi_minus_filter(c, det.bsa) && herald_filter(c, det.herald) && c.clicked(det.bob_detector, kAnalyzedBin)
                   ? 1U
                   : 0U;
      };
      const auto est = sample_events(strata, det.layout, 1, event, config.seed, i, config.trials);
      p = est[0].probability;
      se = est[0].std_error;
    }
    out.control.push_back(phi);
    out.probability.push_back(p);
    out.std_error.push_back(se);
    out.counts.push_back(config.mode == EvaluationMode::analytic ? p * out.pulses
                                                                 : poisson_count(p * out.pulses, config.seed, i));
  }
  return out;
}

MandelResult run_mandel_scan(const ExperimentConfig& config, std::span<const double> delta_x) {
  config.validate();
  auto registry = std::make_shared<ModeRegistry>(config.max_bins);
  const Setup s = build_setup(config, registry);
  DetectorLayout layout = detection_layout(s.layout, config, config.detectors);
  layout.channels.pop_back();  // Bob is not part of the dip measurement
  const BranchSet branches = pair_branches(config, config.mean_alice(), config.mean_epr());

  MandelResult out;
  for (ScanResult* r : {&out.short_path, &out.long_path}) {
    r->pulses = config.pulses();
    r->truncated_mass = branches.truncated_mass;
  }
  for (std::size_t i = 0; i < delta_x.size(); ++i) {
    const double xi = overlap_from_mismatch(delta_x[i], config.overlap);
    std::vector<GateCounts> counts;
    for (const auto& b : branches.branches) {
      const FockState state = source_state(registry, config, b.alice, b.epr, xi);
      counts.push_back(gate_count_distribution(apply(s.front, apply(s.alice_mzi, state)), layout));
    }
    std::array<double, 2> p{};
    std::array<double, 2> se{};
    std::vector<Stratum> strata;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const auto pk = mandel_coincidence(counts[k], layout, config.heralded);
      for (int b = 0; b < 2; ++b) p[static_cast<std::size_t>(b)] += branches.branches[k].weight * pk[static_cast<std::size_t>(b)];
      strata.push_back({branches.branches[k].weight, &counts[k], {pk[0], pk[1]}});
    }
    if (config.mode == EvaluationMode::montecarlo) {
      const bool heralded = config.heralded;
      const EventFn events = [heralded](const ClickPattern& c) -> unsigned {
        if (heralded && !c.clicked(kHeraldDetector, 0)) return 0U;
        unsigned mask = 0;
        for (int b = 0; b < 2; ++b) {
          if (c.clicked(kGeBsa, b) && c.clicked(kInGaAsBsa, b)) mask |= 1U << b;
        }
        return mask;
      };
      const auto est = sample_events(strata, layout, 2, events, config.seed, i, config.trials);
      for (std::size_t b = 0; b < 2; ++b) {
        p[b] = est[b].probability;
        se[b] = est[b].std_error;
      }
    }
    ScanResult* results[] = {&out.short_path, &out.long_path};
    for (std::size_t b = 0; b < 2; ++b) {
      ScanResult& r = *results[b];
      r.control.push_back(delta_x[i]);
      r.probability.push_back(p[b]);
      r.std_error.push_back(se[b]);
      r.counts.push_back(config.mode == EvaluationMode::analytic
                             ? p[b] * r.pulses
                             : poisson_count(p[b] * r.pulses, config.seed, 2 * i + b));
    }
  }
  return out;
}

namespace {

double phase_averaged(TeleportModel& model, std::span<const double> weights, const DetectorSet& detectors) {
  double sum = 0.0;
  for (double phi : phase_grid(kBackgroundPhases, 1.0)) sum += model.outcome(phi, weights, detectors).bob_bin[kAnalyzedBin];
  return sum / kBackgroundPhases;
}

NoiseBudget budget_of(TeleportModel& model, const DetectorSet& detectors) {
  NoiseBudget b;
  b.fringe_mean = phase_averaged(model, model.blocked_weights(Blocked::none), detectors);
  b.background_alice = phase_averaged(model, model.blocked_weights(Blocked::alice), detectors);
  b.background_epr = phase_averaged(model, model.blocked_weights(Blocked::epr), detectors);
  b.background_both = phase_averaged(model, model.blocked_weights(Blocked::both), detectors);
  b.background = b.background_alice + b.background_epr - b.background_both;
  return b;
}

}  // namespace

double run_blocking(const ExperimentConfig& config, Blocked blocked) {
  TeleportModel model(config);
  return phase_averaged(model, model.blocked_weights(blocked), config.detectors);
}

NoiseBudget noise_budget(const ExperimentConfig& config) {
  TeleportModel model(config);
  return budget_of(model, config.detectors);
}

Calibration calibrate_dark_counts(const ExperimentConfig& config, double target_ratio) {
  if (!(target_ratio > 0.0)) throw ConfigError("calibration target ratio must be positive");
  TeleportModel model(config);
  auto ratio_at = [&](double d, NoiseBudget* budget) {
    const NoiseBudget b = budget_of(model, with_dark_counts(config, d).detectors);
    if (budget) *budget = b;
    return b.signal() > 0.0 ? b.background / b.signal() : std::numeric_limits<double>::infinity();
  };
  double lo = -12.0;
  double hi = -1.0;
  Calibration out;
  if (ratio_at(0.0, &out.budget) >= target_ratio) {
    throw NonConvergence("background already exceeds the calibration target without dark counts");
  }
  if (ratio_at(std::pow(10.0, hi), nullptr) < target_ratio) {
    throw NonConvergence("calibration target not reached for dark probabilities up to 0.1");
  }
  while (hi - lo > 1e-9 && out.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    (ratio_at(std::pow(10.0, mid), nullptr) < target_ratio ? lo : hi) = mid;
    ++out.iterations;
  }
  out.dark_prob = std::pow(10.0, 0.5 * (lo + hi));
  ratio_at(out.dark_prob, &out.budget);
  return out;
}

double ideal_bsa_success_probability(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.single_pairs = true;
  c.heralded = false;
  c.loss_alice_db = c.loss_charlie_db = c.loss_bob_db = c.loss_herald_db = 0.0;
  for (DetectorModel* m : {&c.detectors.ge, &c.detectors.ingaas_bsa, &c.detectors.herald, &c.detectors.bob}) {
    m->efficiency = 1.0;
    m->dark_prob_per_gate = 0.0;
  }
  c.validate();
  auto registry = std::make_shared<ModeRegistry>(c.max_bins);
  const Setup s = build_setup(c, registry);
  const double xi = overlap_from_mismatch(c.delta_x, c.overlap);
  FockState state = apply(s.alice_mzi, source_state(registry, c, 1, 1, xi));
  const auto arm = registry->channel(s.alice_arm);
  state = state
              .filtered([&](const Occupation& occ) {
                return std::none_of(arm.begin(), arm.end(), [&](std::size_t m) { return m < occ.size() && occ[m] > 0; });
              })
              .normalized();
  state = apply(s.front, state);
  TeleportDetection det;
  det.layout = s.layout;
  det.bsa = BsaRule{kGeBsa, kInGaAsBsa, c.symmetric_bsa, c.bsa_window_bins};
  det.herald.enabled = false;
  return teleport_outcome_distribution({{1.0, state}}, det).psi_minus;
}

}  // namespace tbrelay
