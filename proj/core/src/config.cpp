#include "tbrelay/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tbrelay/errors.hpp"

namespace tbrelay {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw SchemaViolation(key, "expected a number, got '" + v + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  // Accept 1e6-style integers as well.
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw SchemaViolation(key, "expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw SchemaViolation(key, "expected a boolean, got '" + v + "'");
}

double non_negative(const std::string& key, double v) {
  if (!(v >= 0.0)) throw SchemaViolation(key, "expected a non-negative number");
  return v;
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw SchemaViolation(key, "expected a positive number");
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string boolean(bool v) { return v ? "true" : "false"; }

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Scale factor from config units to the SI units used internally.
Key real(std::string name, double ExperimentConfig::*field, double scale = 1.0, bool allow_negative = false) {
  return {std::move(name),
          [field, scale, allow_negative](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const double d = to_double(k, v);
            c.*field = (allow_negative ? d : non_negative(k, d)) * scale;
          },
          [field, scale](const ExperimentConfig& c) { return num(c.*field / scale); }};
}

template <class Get>
Key real_at(std::string name, Get access, double scale = 1.0, bool strictly_positive = false) {
  return {std::move(name),
          [access, scale, strictly_positive](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const double d = to_double(k, v);
            access(c) = (strictly_positive ? positive(k, d) : non_negative(k, d)) * scale;
          },
          [access, scale](const ExperimentConfig& c) { return num(access(const_cast<ExperimentConfig&>(c)) / scale); }};
}

Key flag(std::string name, bool ExperimentConfig::*field) {
  return {std::move(name), [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = to_bool(k, v); },
          [field](const ExperimentConfig& c) { return boolean(c.*field); }};
}

Key probability(std::string name, double DetectorModel::*field, DetectorModel DetectorSet::*detector, bool open_top) {
  return {std::move(name),
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const double d = to_double(k, v);
            if (!(d >= 0.0 && (open_top ? d < 1.0 : d <= 1.0))) {
              throw SchemaViolation(k, open_top ? "expected a number in [0, 1)" : "expected a number in [0, 1]");
            }
            c.detectors.*detector.*field = d;
          },
          [=](const ExperimentConfig& c) { return num(c.detectors.*detector.*field); }};
}

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"max_photons",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.max_photons = static_cast<int>(to_int(n, v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.max_photons); }});
    k.push_back({"max_bins",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.max_bins = static_cast<int>(to_int(n, v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.max_bins); }});
    k.push_back(real("pair_mean_alice", &ExperimentConfig::pair_mean_alice));
    k.push_back(real("pair_mean_epr", &ExperimentConfig::pair_mean_epr));
    k.push_back({"pair_mean_common",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.pair_mean_common = non_negative(n, to_double(n, v));
                 },
                 [](const ExperimentConfig& c) {
                   return c.pair_mean_common ? num(*c.pair_mean_common) : std::string("none");
                 }});
    k.push_back({"pair_statistics",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   if (v == "thermal") {
                     c.statistics = PairStatistics::thermal;
                   } else if (v == "poissonian") {
                     c.statistics = PairStatistics::poissonian;
                   } else {
                     throw SchemaViolation(n, "expected 'thermal' or 'poissonian', got '" + v + "'");
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.statistics == PairStatistics::thermal ? "thermal" : "poissonian");
                 }});
    k.push_back({"pair_mean_interpretation",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   if (v == "mean") {
                     c.pair_mean_is_probability = false;
                   } else if (v == "probability") {
                     c.pair_mean_is_probability = true;
                   } else {
                     throw SchemaViolation(n, "expected 'mean' or 'probability', got '" + v + "'");
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.pair_mean_is_probability ? "probability" : "mean");
                 }});
    k.push_back(flag("heralded", &ExperimentConfig::heralded));
    k.push_back(flag("single_pairs", &ExperimentConfig::single_pairs));
    k.push_back(real("max_truncated_mass", &ExperimentConfig::max_truncated_mass));
    k.push_back(real("phase_pump", &ExperimentConfig::phase_pump, 1.0, true));
    k.push_back(real("phase_alice", &ExperimentConfig::phase_alice, 1.0, true));
    k.push_back(real("phase_bob", &ExperimentConfig::phase_bob, 1.0, true));
    k.push_back(real("delta_x_um", &ExperimentConfig::delta_x, 1e-6, true));
    k.push_back(real_at("dip_fwhm_um", [](ExperimentConfig& c) -> double& { return c.overlap.dip_fwhm; }, 1e-6, true));
    k.push_back(real_at("coherence_length_um",
                        [](ExperimentConfig& c) -> double& { return c.overlap.coherence_length; }, 1e-6, true));
    k.push_back(real("loss_alice_db", &ExperimentConfig::loss_alice_db));
    k.push_back(real("loss_charlie_db", &ExperimentConfig::loss_charlie_db));
    k.push_back(real("loss_bob_db", &ExperimentConfig::loss_bob_db));
    k.push_back(real("loss_herald_db", &ExperimentConfig::loss_herald_db));
    k.push_back(probability("eta_ge", &DetectorModel::efficiency, &DetectorSet::ge, false));
    k.push_back(probability("eta_ingaas_bsa", &DetectorModel::efficiency, &DetectorSet::ingaas_bsa, false));
    k.push_back(probability("eta_herald", &DetectorModel::efficiency, &DetectorSet::herald, false));
    k.push_back(probability("eta_bob", &DetectorModel::efficiency, &DetectorSet::bob, false));
    k.push_back(probability("dark_ge", &DetectorModel::dark_prob_per_gate, &DetectorSet::ge, true));
    k.push_back(probability("dark_ingaas_bsa", &DetectorModel::dark_prob_per_gate, &DetectorSet::ingaas_bsa, true));
    k.push_back(probability("dark_herald", &DetectorModel::dark_prob_per_gate, &DetectorSet::herald, true));
    k.push_back(probability("dark_bob", &DetectorModel::dark_prob_per_gate, &DetectorSet::bob, true));
    k.push_back(flag("symmetric_bsa", &ExperimentConfig::symmetric_bsa));
    k.push_back({"bsa_window_bins",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.bsa_window_bins = static_cast<int>(to_int(n, v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.bsa_window_bins); }});
    k.push_back(real_at("rep_rate_hz", [](ExperimentConfig& c) -> double& { return c.rep_rate; }, 1.0, true));
    k.push_back(real_at("bin_pitch_ns", [](ExperimentConfig& c) -> double& { return c.bin_pitch; }, 1e-9, true));
    k.push_back({"pulses_per_point",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   const auto p = to_int(n, v);
                   if (p < 1) throw SchemaViolation(n, "expected an integer >= 1");
                   c.pulses_per_point = p;
                 },
                 [](const ExperimentConfig& c) {
                   return c.pulses_per_point ? std::to_string(*c.pulses_per_point) : std::string("none");
                 }});
    k.push_back(real_at("integration_minutes", [](ExperimentConfig& c) -> double& { return c.integration_minutes; },
                        1.0, true));
    k.push_back({"mode",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   if (v == "analytic") {
                     c.mode = EvaluationMode::analytic;
                   } else if (v == "montecarlo") {
                     c.mode = EvaluationMode::montecarlo;
                   } else {
                     throw SchemaViolation(n, "expected 'analytic' or 'montecarlo', got '" + v + "'");
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.mode == EvaluationMode::analytic ? "analytic" : "montecarlo");
                 }});
    k.push_back({"trials",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.trials = to_int(n, v);
                   if (c.trials < 1) throw SchemaViolation(n, "expected an integer >= 1");
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.trials); }});
    k.push_back({"seed",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   std::uint64_t s = 0;
                   const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
                   if (ec != std::errc() || ptr != v.data() + v.size()) {
                     throw SchemaViolation(n, "expected an unsigned integer, got '" + v + "'");
                   }
                   c.seed = s;
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    k.push_back(real_at("alice_spool_m", [](ExperimentConfig& c) -> double& { return c.timing.alice_spool; }));
    k.push_back(real_at("charlie_spool_m", [](ExperimentConfig& c) -> double& { return c.timing.charlie_spool; }));
    k.push_back(real_at("quantum_fiber_m", [](ExperimentConfig& c) -> double& { return c.timing.quantum_fiber; }));
    k.push_back(real_at("classical_fiber_m", [](ExperimentConfig& c) -> double& { return c.timing.classical_fiber; }));
    k.push_back(real_at("bob_spool_m", [](ExperimentConfig& c) -> double& { return c.timing.bob_spool; }));
    k.push_back(real_at("group_index", [](ExperimentConfig& c) -> double& { return c.timing.group_index; }, 1.0, true));
    k.push_back(real_at("bsa_latency_ns", [](ExperimentConfig& c) -> double& { return c.timing.bsa_latency; }, 1e-9));
    k.push_back({"drift_process",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   if (v == "sinusoid") {
                     c.drift.process = TemperatureProcess::sinusoid;
                   } else if (v == "random_walk") {
                     c.drift.process = TemperatureProcess::random_walk;
                   } else {
                     throw SchemaViolation(n, "expected 'sinusoid' or 'random_walk', got '" + v + "'");
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.drift.process == TemperatureProcess::sinusoid ? "sinusoid" : "random_walk");
                 }});
    k.push_back(real_at("drift_temperature_amplitude_k",
                        [](ExperimentConfig& c) -> double& { return c.drift.temperature_amplitude; }));
    k.push_back(real_at("drift_temperature_period_h",
                        [](ExperimentConfig& c) -> double& { return c.drift.temperature_period; }, 3600.0, true));
    k.push_back(real_at("drift_thermal_coeff_um_per_k",
                        [](ExperimentConfig& c) -> double& { return c.drift.thermal_coefficient; }, 1e-6));
    k.push_back(real_at("drift_rep_rate_bound_hz_per_h",
                        [](ExperimentConfig& c) -> double& { return c.drift.rep_rate_wander_bound; }));
    k.push_back(real_at("drift_jitter_bound_um", [](ExperimentConfig& c) -> double& { return c.drift.jitter_bound; },
                        1e-6));
    k.push_back(real_at("drift_jitter_time_min",
                        [](ExperimentConfig& c) -> double& { return c.drift.jitter_correlation_time; }, 60.0, true));
    k.push_back(real_at("pulse_spacing_m", [](ExperimentConfig& c) -> double& { return c.drift.pulse_spacing; }));
    k.push_back(real_at("controller_gain_um_per_hz", [](ExperimentConfig& c) -> double& { return c.controller.gain; },
                        1e-6));
    k.push_back(real_at("controller_resolution_nm",
                        [](ExperimentConfig& c) -> double& { return c.controller.resolution; }, 1e-9));
    k.push_back(real_at("controller_update_s",
                        [](ExperimentConfig& c) -> double& { return c.controller.update_interval; }, 1.0, true));
    k.push_back({"controller_gain_error",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.controller.gain_error = to_double(n, v);
                   if (!(c.controller.gain_error > -1.0)) throw SchemaViolation(n, "expected a number > -1");
                 },
                 [](const ExperimentConfig& c) { return num(c.controller.gain_error); }});
    k.push_back(real_at("stability_duration_h", [](ExperimentConfig& c) -> double& { return c.stability.duration; },
                        3600.0));
    k.push_back(real_at("stability_dt_s", [](ExperimentConfig& c) -> double& { return c.stability.dt; }, 1.0, true));
    k.push_back(real_at("dip_visibility", [](ExperimentConfig& c) -> double& { return c.stability.dip_visibility; }));
    return k;
  }();
  return keys;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c = build_default_config();
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw SchemaViolation(body, "line " + std::to_string(line_no) + " is not of the form key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto& keys = schema();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
    if (it == keys.end()) throw SchemaViolation(key, "unknown key");
    if (!seen.insert(key).second) throw SchemaViolation(key, "given more than once");
    if (value.empty()) throw SchemaViolation(key, "missing value");
    it->set(c, key, value);
  }
  if (seen.count("pair_mean_common") && (seen.count("pair_mean_alice") || seen.count("pair_mean_epr"))) {
    throw SchemaViolation("pair_mean_common", "cannot be combined with pair_mean_alice / pair_mean_epr");
  }
  if (seen.count("pulses_per_point") && seen.count("integration_minutes")) {
    throw SchemaViolation("pulses_per_point", "cannot be combined with integration_minutes");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : schema()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : schema()) out.push_back(k.name);
  return out;
}

}  // namespace tbrelay
