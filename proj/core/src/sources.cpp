#include "tbrelay/sources.hpp"

#include <cmath>

#include "tbrelay/errors.hpp"

namespace tbrelay {

double OverlapModel::overlap_length() const { return dip_fwhm / std::sqrt(2.0 * std::log(2.0)); }

double pair_probability(PairStatistics statistics, double mean, int n) {
  if (n < 0) return 0.0;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  switch (statistics) {
    case PairStatistics::thermal:
      return std::pow(mean, n) / std::pow(1.0 + mean, n + 1);
    case PairStatistics::poissonian:
      return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
  }
  return 0.0;
}

std::vector<double> pair_count_distribution(const SpdcSource& source, int n_cut, double max_tail) {
  if (!(source.mean_pairs >= 0.0)) throw ConfigError("mean pair number must be non-negative");
  if (n_cut < 0) throw ConfigError("n_cut must be non-negative");
  std::vector<double> p(static_cast<std::size_t>(n_cut) + 1);
  double kept = 0.0;
  for (int n = 0; n <= n_cut; ++n) {
    p[static_cast<std::size_t>(n)] = pair_probability(source.statistics, source.mean_pairs, n);
    kept += p[static_cast<std::size_t>(n)];
  }
  const double tail = 1.0 - kept;
  if (tail > max_tail) {
    throw TailMassTooLarge("pair tail beyond n=" + std::to_string(n_cut) + " is " + std::to_string(tail) +
                           " (limit " + std::to_string(max_tail) + "); raise max_photons or lower the mean");
  }
  for (auto& v : p) v /= kept;
  return p;
}

std::vector<double> two_pulse_pair_distribution(const SpdcSource& source, int n_cut) {
  if (!(source.mean_pairs >= 0.0)) throw ConfigError("mean pair number must be non-negative");
  const double per_bin = source.mean_pairs * source.pump_bin_fraction;
  std::vector<double> single(static_cast<std::size_t>(n_cut) + 1);
  for (int n = 0; n <= n_cut; ++n) {
    single[static_cast<std::size_t>(n)] = pair_probability(source.statistics, per_bin, n);
  }
  std::vector<double> out(static_cast<std::size_t>(n_cut) + 2, 0.0);
  double kept = 0.0;
  for (int n = 0; n <= n_cut; ++n) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      s += single[static_cast<std::size_t>(k)] * single[static_cast<std::size_t>(n - k)];
    }
    out[static_cast<std::size_t>(n)] = s;
    kept += s;
  }
  out.back() = std::max(0.0, 1.0 - kept);
  return out;
}

double mean_from_pair_probability(PairStatistics statistics, double probability) {
  if (!(probability >= 0.0 && probability < 1.0)) {
    throw ConfigError("pair probability per pulse must lie in [0,1)");
  }
  switch (statistics) {
    case PairStatistics::thermal:
      return probability / (1.0 - probability);
    case PairStatistics::poissonian:
      return -std::log1p(-probability);
  }
  return probability;
}

FockState emit_entangled(std::shared_ptr<ModeRegistry> registry, const SpdcSource& source, int n_pairs,
                         int max_photons) {
  if (n_pairs < 0) throw ConfigError("pair number must be non-negative");
  if (2 * n_pairs > max_photons) {
    throw TruncationOverflow(std::to_string(n_pairs) + " entangled pairs exceed max_photons=" +
                             std::to_string(max_photons));
  }
  const std::size_t c0 = registry->ensure({source.signal_channel, 0, source.internal_label});
  const std::size_t c1 = registry->ensure({source.signal_channel, 1, source.internal_label});
  const std::size_t b0 = registry->ensure({source.idler_channel, 0, 0});
  const std::size_t b1 = registry->ensure({source.idler_channel, 1, 0});
  const Complex late_phase = std::polar(1.0, source.pump_phase);

  FockState state = FockState::vacuum(registry, max_photons);
  for (int k = 0; k < n_pairs; ++k) {
    FockState early = apply_creation(apply_creation(state, c0), b0);
    FockState late = apply_creation(apply_creation(state, c1), b1).scaled(late_phase);
    state = early + late;
  }
  return state.normalized();
}

FockState emit_alice(std::shared_ptr<ModeRegistry> registry, const SpdcSource& source, int n_pairs,
                     double overlap, int max_photons) {
  if (n_pairs < 0) throw ConfigError("pair number must be non-negative");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap must lie in [0,1]");
  if (2 * n_pairs > max_photons) {
    throw TruncationOverflow(std::to_string(n_pairs) + " heralding pairs exceed max_photons=" +
                             std::to_string(max_photons));
  }
  const std::size_t same = registry->ensure({source.signal_channel, 0, 0});
  const std::size_t orthogonal = registry->ensure({source.signal_channel, 0, 1});
  const std::size_t herald = registry->ensure({source.idler_channel, 0, 0});
  const double complement = std::sqrt(std::max(0.0, 1.0 - overlap * overlap));

  FockState state = FockState::vacuum(registry, max_photons);
  for (int k = 0; k < n_pairs; ++k) {
    FockState with_herald = apply_creation(state, herald);
    FockState next = apply_creation(with_herald, same).scaled(overlap);
    if (complement > 0.0) next = next + apply_creation(with_herald, orthogonal).scaled(complement);
    state = next;
  }
  return state.normalized();
}

double overlap_from_mismatch(double delta_x, const OverlapModel& model) {
  const double l = model.overlap_length();
  const double r = delta_x / l;
  return std::exp(-r * r);
}

}  // namespace tbrelay
