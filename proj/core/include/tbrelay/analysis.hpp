#pragma once

#include <span>
#include <string_view>

namespace tbrelay {

inline constexpr double kClassicalLimit = 1.0 / 3.0;
inline constexpr double kCloningLimit = 2.0 / 3.0;

/// Weighted fit of counts to A (1 + V cos(x - phase)).
struct FitResult {
  double amplitude = 0.0;
  double visibility = 0.0;   // constrained to [0, 1]
  double phase = 0.0;        // radians, in (-pi, pi]
  double sigma_amplitude = 0.0;
  double sigma_visibility = 0.0;
  double sigma_phase = 0.0;
  double chi2_per_dof = 0.0;
  // Linear fit before the [0, 1] constraint; equals `visibility` unless that exceeded 1.
  double unconstrained_visibility = 0.0;
  bool constrained = false;
};

/// Linear weighted least squares in (a, b, c) for a + b cos x + c sin x with
/// sigma_i = sqrt(max(count_i, 1)); V and its error follow by the delta
/// method. Needs at least 5 points covering one period. A fit that lands at
/// V > 1 is redone with V = sin^2(theta).
FitResult fit_fringe(std::span<const double> x, std::span<const double> counts);

/// Gaussian dip: y = baseline (1 - V exp(-4 ln2 (x - center)^2 / fwhm^2)).
struct DipFit {
  double baseline = 0.0;
  double visibility = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
};

DipFit fit_dip(std::span<const double> x, std::span<const double> y);

/// F = (1 + V) / 2 for equatorial qubits.
double fidelity(double visibility);

struct NetVisibility {
  double value = 0.0;
  double sigma = 0.0;
  bool capped = false;
};

/// V_net = V_raw m / (m - b), capped at 1. Uncertainties add in quadrature.
NetVisibility net_visibility(double v_raw, double mean, double background, double sigma_v = 0.0,
                             double sigma_mean = 0.0, double sigma_background = 0.0);

enum class Classification { below_classical, quantum, above_cloning };

/// Thresholds 1/3 and 2/3; a value on a threshold is placed in the upper class.
Classification classify(double visibility);
std::string_view to_string(Classification c);

}  // namespace tbrelay
