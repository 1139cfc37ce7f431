#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbrelay/analysis.hpp"
#include "tbrelay/config.hpp"
#include "tbrelay/errors.hpp"
#include "tbrelay/scenarios.hpp"
#include "tbrelay/stability.hpp"

namespace tbrelay::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Manifest {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<std::int64_t> trials;
  std::string out_dir = ".";
  bool heralded = false;
  std::optional<int> points;
  std::optional<double> periods;
};

// CSV cells use 9 significant digits.
std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(9) << v;
  return s.str();
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row_strings(header); }

  void row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(num(v));
    row_strings(cells);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ << (i ? "," : "") << cells[i];
    text_ << '\n';
  }
  const std::string text() const { return text_.str(); }

 private:
  std::ostringstream text_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file " + path.string());
  f << text;
  if (!f) throw ConfigError("failed writing " + path.string());
}

ExperimentConfig resolve_config(const Manifest& m) {
  ExperimentConfig c = m.config_path.empty() ? build_default_config() : load_config(m.config_path);
  if (m.seed) c.seed = *m.seed;
  if (!m.mode.empty()) c.mode = m.mode == "montecarlo" ? EvaluationMode::montecarlo : EvaluationMode::analytic;
  if (m.trials) c.trials = *m.trials;
  if (m.heralded) c.heralded = true;
  c.validate();
  return c;
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config_entries(c)) j[k] = v;
  return j;
}

ordered_json fit_json(const FitResult& f) {
  return {{"amplitude", f.amplitude},
          {"visibility", f.visibility},
          {"sigma_visibility", f.sigma_visibility},
          {"phase", f.phase},
          {"sigma_phase", f.sigma_phase},
          {"chi2_per_dof", f.chi2_per_dof},
          {"unconstrained_visibility", f.unconstrained_visibility},
          {"constrained", f.constrained}};
}

struct Output {
  fs::path dir;
  std::string name;
  void emit(const std::string& csv, const ordered_json& summary) const {
    fs::create_directories(dir);
    if (!csv.empty()) write_file(dir / (name + ".csv"), csv);
    write_file(dir / (name + ".json"), summary.dump(2) + "\n");
  }
};

ordered_json summary_head(const Manifest& m, const ExperimentConfig& c) {
  ordered_json j;
  j["subcommand"] = m.subcommand;
  j["seed"] = c.seed;
  j["mode"] = c.mode == EvaluationMode::analytic ? "analytic" : "montecarlo";
  j["trials"] = c.trials;
  return j;
}

int cmd_mandel(const Manifest& m, std::ostream& out) {
  const ExperimentConfig c = resolve_config(m);
  const int points = m.points.value_or(41);
  if (points < 5) throw ConfigError("--points must be at least 5 for a dip scan");
  // +-3 FWHM around the dip
  const double half = 3.0 * c.overlap.dip_fwhm;
  std::vector<double> dx;
  for (int i = 0; i < points; ++i) dx.push_back(-half + 2.0 * half * i / (points - 1));
  const MandelResult r = run_mandel_scan(c, dx);

  Csv csv({"delta_x_um", "coinc_short", "coinc_long"});
  for (std::size_t i = 0; i < dx.size(); ++i) csv.row({dx[i] * 1e6, r.short_path.counts[i], r.long_path.counts[i]});

  ordered_json j = summary_head(m, c);
  for (const auto& [name, scan] : {std::pair{"short_path", &r.short_path}, std::pair{"long_path", &r.long_path}}) {
    const DipFit f = fit_dip(scan->control, scan->counts);
    j[name] = {{"visibility", f.visibility},
               {"fwhm_um", f.fwhm * 1e6},
               {"center_um", f.center * 1e6},
               {"baseline", f.baseline}};
    out << name << ": V=" << num(f.visibility) << " fwhm_um=" << num(f.fwhm * 1e6) << "\n";
  }
  j["truncated_mass"] = r.short_path.truncated_mass;
  j["config"] = config_json(c);
  Output{m.out_dir, "mandel"}.emit(csv.text(), j);
  return kOk;
}

int cmd_teleport(const Manifest& m, std::ostream& out) {
  const ExperimentConfig c = resolve_config(m);
  const auto phases = phase_grid(m.points.value_or(16), m.periods.value_or(2.0));
  const ScanResult r = run_teleport_scan(c, phases);
  const FitResult f = fit_fringe(r.control, r.counts);
  const NoiseBudget b = noise_budget(c);
  const NetVisibility net = net_visibility(f.visibility, b.fringe_mean, b.background, f.sigma_visibility);

  Csv csv({"phi_b_rad", "counts", "expected_prob"});
  for (std::size_t i = 0; i < phases.size(); ++i) csv.row({r.control[i], r.counts[i], r.probability[i]});

  ordered_json j = summary_head(m, c);
  j["heralded"] = c.heralded;
  j["pulses_per_point"] = r.pulses;
  j["V_raw"] = f.visibility;
  j["sigma_V_raw"] = f.sigma_visibility;
  j["F_raw"] = fidelity(f.visibility);
  j["sigma_F_raw"] = 0.5 * f.sigma_visibility;
  j["classification"] = std::string(to_string(classify(f.visibility)));
  j["V_net"] = net.value;
  j["sigma_V_net"] = net.sigma;
  j["V_net_capped"] = net.capped;
  j["F_net"] = fidelity(net.value);
  j["classification_net"] = std::string(to_string(classify(net.value)));
  j["fit"] = fit_json(f);
  j["background_per_pulse"] = b.background;
  j["fringe_mean_per_pulse"] = b.fringe_mean;
  j["truncated_mass"] = r.truncated_mass;
  j["config"] = config_json(c);
  Output{m.out_dir, "teleport"}.emit(csv.text(), j);
  out << "V_raw=" << num(f.visibility) << " +- " << num(f.sigma_visibility) << " F_raw=" << num(fidelity(f.visibility))
      << " (" << to_string(classify(f.visibility)) << ")\n";
  return kOk;
}

int cmd_noise(const Manifest& m, std::ostream& out) {
  const ExperimentConfig c = resolve_config(m);
  const NoiseBudget b = noise_budget(c);
  const double pulses = c.pulses();
  Csv csv({"blocked", "prob_per_pulse", "counts"});
  const std::pair<const char*, double> rows[] = {{"none", b.fringe_mean},
                                                 {"alice", b.background_alice},
                                                 {"epr", b.background_epr},
                                                 {"both", b.background_both}};
  for (const auto& [name, p] : rows) {
    csv.row_strings({name, num(p), num(p * pulses)});
    out << name << ": " << num(p) << " per pulse\n";
  }
  ordered_json j = summary_head(m, c);
  j["fringe_mean_per_pulse"] = b.fringe_mean;
  j["background_alice"] = b.background_alice;
  j["background_epr"] = b.background_epr;
  j["background_both"] = b.background_both;
  j["background"] = b.background;
  j["signal"] = b.signal();
  j["background_to_signal"] = b.signal() > 0.0 ? b.background / b.signal() : std::nan("");
  j["config"] = config_json(c);
  Output{m.out_dir, "noise"}.emit(csv.text(), j);
  return kOk;
}

std::string stability_csv(const std::vector<StabilitySample>& samples) {
  Csv csv({"t", "delta_x_um", "rep_rate_hz", "motor_um", "norm_coincidences"});
  for (const auto& s : samples) csv.row({s.t, s.delta_x * 1e6, s.rep_rate, s.motor * 1e6, s.norm_coincidences});
  return csv.text();
}

int cmd_stability(const Manifest& m, std::ostream& out) {
  const ExperimentConfig c = resolve_config(m);
  StabilityOptions opt = c.stability;
  opt.seed = c.seed;
  const auto free_run = simulate(c.drift, std::nullopt, opt);
  const auto locked = simulate(c.drift, c.controller, opt);

  auto describe = [](const std::vector<StabilitySample>& s) {
    double max_dx = 0.0;
    double max_c = 0.0;
    double min_c = 1.0;
    for (const auto& p : s) {
      max_dx = std::max(max_dx, std::abs(p.delta_x));
      max_c = std::max(max_c, p.norm_coincidences);
      min_c = std::min(min_c, p.norm_coincidences);
    }
    return ordered_json{{"max_abs_delta_x_um", max_dx * 1e6}, {"max_norm_coincidences", max_c},
                        {"min_norm_coincidences", min_c}};
  };

  // Modelled teleportation coincidence rate with the configured detectors.
  const double rate = noise_budget(c).fringe_mean * c.rep_rate;
  const PidFeasibility pid = pid_alternative_analysis(c.drift, rate, opt.dip_visibility, opt.overlap);

  fs::create_directories(m.out_dir);
  write_file(fs::path(m.out_dir) / "stability_free.csv", stability_csv(free_run));
  write_file(fs::path(m.out_dir) / "stability_controlled.csv", stability_csv(locked));
  ordered_json j = summary_head(m, c);
  j["uncontrolled"] = describe(free_run);
  j["controlled"] = describe(locked);
  j["pid_alternative"] = {{"count_rate_per_s", rate},
                          {"tolerance_um", pid.tolerance * 1e6},
                          {"required_counts", pid.required_counts},
                          {"integration_time_s", pid.integration_time},
                          {"drift_time_s", std::isfinite(pid.drift_time) ? ordered_json(pid.drift_time) : ordered_json()},
                          {"feasible", pid.feasible}};
  j["config"] = config_json(c);
  Output{m.out_dir, "stability"}.emit("", j);
  out << "uncontrolled max coincidences " << num(j["uncontrolled"]["max_norm_coincidences"].get<double>())
      << ", controlled max " << num(j["controlled"]["max_norm_coincidences"].get<double>()) << "\n";
  return kOk;
}

int cmd_timing(const Manifest& m, std::ostream& out) {
  const ExperimentConfig c = resolve_config(m);
  out << "slack_ns = " << num(validate_timing(c.timing) * 1e9) << "\n";
  return kOk;
}

int cmd_limits(std::ostream& out) {
  out << "quantity,visibility,fidelity\n"
      << "mandel_dip_unheralded_max," << num(1.0 / 3.0) << ",\n"
      << "classical_limit," << num(kClassicalLimit) << "," << num(fidelity(kClassicalLimit)) << "\n"
      << "cloning_limit," << num(kCloningLimit) << "," << num(fidelity(kCloningLimit)) << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Manifest m;
  CLI::App app{"Time-bin quantum relay simulator", "tbrelay"};
  app.require_subcommand(1);

  auto add_common = [&m](CLI::App* sub, bool scan) {
    sub->add_option("--config", m.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", m.seed, "random seed (default 12345)");
    sub->add_option("--mode", m.mode, "evaluation mode")->check(CLI::IsMember({"analytic", "montecarlo"}));
    sub->add_option("--trials", m.trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);
    sub->add_option("--out", m.out_dir, "output directory");
    if (scan) {
      sub->add_flag("--heralded", m.heralded, "require the herald click");
      sub->add_option("--points", m.points, "scan points")->check(CLI::PositiveNumber);
      sub->add_option("--periods", m.periods, "fringe periods covered")->check(CLI::PositiveNumber);
    }
  };
  for (const char* name : {"mandel", "teleport", "noise"}) {
    add_common(app.add_subcommand(name, std::string(name) + " scan"), true);
  }
  add_common(app.add_subcommand("stability", "drift and feedback simulation"), false);
  add_common(app.add_subcommand("validate-timing", "classical trigger versus photon arrival at Bob"), false);
  app.add_subcommand("limits", "visibility and fidelity thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  m.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (m.subcommand == "mandel") return cmd_mandel(m, out);
    if (m.subcommand == "teleport") return cmd_teleport(m, out);
    if (m.subcommand == "noise") return cmd_noise(m, out);
    if (m.subcommand == "stability") return cmd_stability(m, out);
    if (m.subcommand == "validate-timing") return cmd_timing(m, out);
    return cmd_limits(out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace tbrelay::cli
