#include "tbrelay/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "tbrelay/detection.hpp"
#include "tbrelay/errors.hpp"
#include "tbrelay/rng.hpp"

namespace tbrelay {

double rep_rate_length_shift(double delta_f, double pulse_spacing, double rep_rate) {
  if (!(rep_rate > 0.0)) throw ConfigError("repetition rate must be positive");
  return pulse_spacing * delta_f / rep_rate;
}

double pulse_spacing(double rep_rate, double group_index) {
  if (!(rep_rate > 0.0)) throw ConfigError("repetition rate must be positive");
  if (!(group_index > 0.0)) throw ConfigError("group index must be positive");
  return kSpeedOfLight / (group_index * rep_rate);
}

double rep_rate_temperature_coupling(const DriftModel& drift, double gain) {
  const double per_hz = gain - drift.pulse_spacing / drift.rep_rate;
  if (!(per_hz > 0.0)) throw ConfigError("controller gain must exceed the pulse-spacing sensitivity");
  return drift.thermal_coefficient / per_hz;
}

double normalized_coincidences(double delta_x, double dip_visibility, const OverlapModel& overlap) {
  const double xi = overlap_from_mismatch(delta_x, overlap);
  return 1.0 - dip_visibility * xi * xi;
}

namespace {

void check_drift(const DriftModel& d) {
  for (double v : {d.temperature_amplitude, d.thermal_coefficient, d.rep_rate_wander_bound, d.jitter_bound,
                   d.pulse_spacing}) {
    if (!(v >= 0.0)) throw ConfigError("drift coefficients must be non-negative");
  }
  if (!(d.temperature_period > 0.0)) throw ConfigError("temperature period must be positive");
  if (!(d.jitter_correlation_time > 0.0)) throw ConfigError("jitter correlation time must be positive");
  if (!(d.rep_rate > 0.0)) throw ConfigError("repetition rate must be positive");
}

double quantize(double x, double step) {
  if (step <= 0.0) return x;
  return std::round(x / step) * step;
}

}  // namespace

std::vector<StabilitySample> simulate(const DriftModel& drift, const std::optional<Controller>& controller,
                                      const StabilityOptions& options) {
  check_drift(drift);
  if (!(options.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(options.duration >= 0.0)) throw ConfigError("duration must be non-negative");
  if (controller) {
    if (!(controller->gain >= 0.0)) throw ConfigError("controller gain must be non-negative");
    if (!(controller->update_interval > 0.0)) throw ConfigError("controller update interval must be positive");
  }

  // The nominal gain defines the temperature coupling, so a matched
  // controller cancels thermal and rep-rate drift together.
  const double nominal_gain = controller ? controller->gain : Controller{}.gain;
  const double kappa = rep_rate_temperature_coupling(drift, nominal_gain);

  SplitMix64 rng(counter_key(options.seed, 0x57ab));
  std::normal_distribution<double> normal;

  const double sigma_jitter = drift.jitter_bound / 2.0;
  const double decay = std::exp(-options.dt / drift.jitter_correlation_time);
  const double kick = sigma_jitter * std::sqrt(1.0 - decay * decay);

  const auto steps = static_cast<std::size_t>(std::floor(options.duration / options.dt + 1e-9));
  std::vector<StabilitySample> out;
  out.reserve(steps + 1);

  double temperature = 0.0;
  double previous = 0.0;
  double jitter = 0.0;
  double motor = 0.0;
  double next_update = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    if (k > 0) {
      if (drift.process == TemperatureProcess::random_walk) {
        temperature += drift.temperature_amplitude * std::sqrt(options.dt / 3600.0) * normal(rng);
      }
      jitter = std::clamp(jitter * decay + kick * normal(rng), -drift.jitter_bound, drift.jitter_bound);
    }
    if (drift.process == TemperatureProcess::sinusoid) {
      temperature = drift.temperature_amplitude * std::sin(2.0 * std::numbers::pi * t / drift.temperature_period);
    }
    // The laser never wanders faster than the worst-case rep-rate slope.
    if (k > 0 && kappa > 0.0) {
      const double max_step = drift.rep_rate_wander_bound * options.dt / 3600.0 / kappa;
      temperature = std::clamp(temperature, previous - max_step, previous + max_step);
    }
    previous = temperature;
    const double delta_f = kappa * temperature;
    if (controller && t + 1e-9 >= next_update) {
      motor = quantize(controller->gain * (1.0 + controller->gain_error) * delta_f, controller->resolution);
      next_update += controller->update_interval;
    }
    const double dx = drift.thermal_coefficient * temperature +
                      rep_rate_length_shift(delta_f, drift.pulse_spacing, drift.rep_rate) + jitter - motor;
    out.push_back({t, dx, drift.rep_rate + delta_f, motor,
                   normalized_coincidences(dx, options.dip_visibility, options.overlap)});
  }
  return out;
}

PidFeasibility pid_alternative_analysis(const DriftModel& drift, double count_rate, double dip_visibility,
                                        const OverlapModel& overlap) {
  check_drift(drift);
  if (!(count_rate > 0.0)) throw ConfigError("count rate must be positive");
  constexpr double kOverlapFloor = 0.9;
  PidFeasibility r;
  r.tolerance = overlap.overlap_length() * std::sqrt(std::log(1.0 / kOverlapFloor) / 2.0);
  const double delta_c = dip_visibility * (1.0 - kOverlapFloor);
  r.required_counts = std::pow(3.0 / delta_c, 2);
  r.integration_time = r.required_counts / count_rate;

  // Worst-case slope of the mismatch (m/s).
  double rate = 0.0;
  if (drift.temperature_amplitude > 0.0) {
    const double kappa = rep_rate_temperature_coupling(drift, Controller{}.gain);
    const double per_kelvin = drift.thermal_coefficient + drift.pulse_spacing * kappa / drift.rep_rate;
    if (drift.process == TemperatureProcess::sinusoid) {
      rate = per_kelvin * drift.temperature_amplitude * 2.0 * std::numbers::pi / drift.temperature_period;
    } else {
      // one-sigma excursion over the tolerance-crossing scale, per hour
      rate = per_kelvin * drift.temperature_amplitude / 3600.0;
    }
  }
  r.drift_time = rate > 0.0 ? r.tolerance / rate : std::numeric_limits<double>::infinity();
  r.feasible = r.integration_time < r.drift_time;
  return r;
}

}  // namespace tbrelay
