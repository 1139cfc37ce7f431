#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tbrelay/sources.hpp"

namespace tbrelay {

enum class TemperatureProcess { sinusoid, random_walk };

/// Slow drift of the path-length mismatch between Alice's and Charlie's photons.
struct DriftModel {
  TemperatureProcess process = TemperatureProcess::sinusoid;
  double temperature_amplitude = 1.0;  // K (sinusoid) or K/sqrt(h) (random walk)
  double temperature_period = 48.0 * 3600.0;  // s
  double thermal_coefficient = 100e-6;  // m/K, uncompensated fiber
  double rep_rate_wander_bound = 400.0;  // Hz/h, worst case
  double jitter_bound = 10e-6;          // m; 60 um for the 800 m spools
  double jitter_correlation_time = 1800.0;  // s
  double rep_rate = 75e6;               // Hz
  double pulse_spacing = 2.72;          // m
};

/// Feedback that moves the translation stage by gain * (f - f0).
struct Controller {
  double gain = 0.07e-6;        // m/Hz
  double resolution = 200e-9;   // m
  double update_interval = 60.0;  // s
  double gain_error = 0.0;      // relative error of the applied gain
};

/// Length change of the pulse-spacing spool for a repetition-rate offset.
double rep_rate_length_shift(double delta_f, double pulse_spacing = 2.72, double rep_rate = 75e6);

/// Fiber length matching one pulse period.
double pulse_spacing(double rep_rate, double group_index);

/// Rep-rate sensitivity to temperature (Hz/K) that makes `gain` the exact
/// compensating rate for the combined thermal and rep-rate drift.
double rep_rate_temperature_coupling(const DriftModel& drift, double gain);

struct StabilitySample {
  double t = 0.0;              // s
  double delta_x = 0.0;        // m
  double rep_rate = 0.0;       // Hz
  double motor = 0.0;          // m
  double norm_coincidences = 0.0;
};

struct StabilityOptions {
  double duration = 24.0 * 3600.0;  // s
  double dt = 60.0;                 // s
  std::uint64_t seed = 12345;
  double dip_visibility = 1.0 / 3.0;
  OverlapModel overlap{};
};

/// Time-stepped drift simulation. Without a controller the motor stays at 0.
std::vector<StabilitySample> simulate(const DriftModel& drift, const std::optional<Controller>& controller,
                                      const StabilityOptions& options = {});

/// Normalized Mandel coincidences for a given mismatch: 1 - V_dip xi^2.
double normalized_coincidences(double delta_x, double dip_visibility = 1.0 / 3.0, const OverlapModel& overlap = {});

struct PidFeasibility {
  double tolerance = 0.0;          // m, mismatch at which xi^2 drops to 0.9
  double required_counts = 0.0;    // to resolve that coincidence change at 3 sigma
  double integration_time = 0.0;   // s
  double drift_time = 0.0;         // s, time for the worst-case drift to cross the tolerance
  bool feasible = false;
};

/// Could the dip depth itself serve as a PID error signal at this count rate?
PidFeasibility pid_alternative_analysis(const DriftModel& drift, double count_rate, double dip_visibility = 1.0 / 3.0,
                                        const OverlapModel& overlap = {});

}  // namespace tbrelay
