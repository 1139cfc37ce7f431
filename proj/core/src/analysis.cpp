#include "tbrelay/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "tbrelay/errors.hpp"

namespace tbrelay {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double p) {
  p = std::remainder(p, kTwoPi);
  if (p <= -std::numbers::pi) p += kTwoPi;
  return p;
}

double poisson_sigma(double count) { return std::sqrt(std::max(count, 1.0)); }

// Constrained fringe: parameters (A, theta, phase), V = sin^2 theta.
struct ConstrainedFringe {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const double> x;
  std::span<const double> y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const double v = std::pow(std::sin(p[1]), 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (p[0] * (1.0 + v * std::cos(x[i] - p[2])) - y[i]) / poisson_sigma(y[i]);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    const double s = std::sin(p[1]);
    const double v = s * s;
    const double dv = 2.0 * s * std::cos(p[1]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double w = 1.0 / poisson_sigma(y[i]);
      const double c = std::cos(x[i] - p[2]);
      j(k, 0) = w * (1.0 + v * c);
      j(k, 1) = w * p[0] * dv * c;
      j(k, 2) = w * p[0] * v * std::sin(x[i] - p[2]);
    }
    return 0;
  }
};

struct GaussianDip {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> x;  // scaled
  std::vector<double> y;  // scaled

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }

  // p = (baseline, V, center, fwhm)
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const double k = 4.0 * std::log(2.0) / (p[3] * p[3]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - p[2];
      r[static_cast<Eigen::Index>(i)] = p[0] * (1.0 - p[1] * std::exp(-k * d * d)) - y[i];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    const double k = 4.0 * std::log(2.0) / (p[3] * p[3]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double d = x[i] - p[2];
      const double g = std::exp(-k * d * d);
      j(r, 0) = 1.0 - p[1] * g;
      j(r, 1) = -p[0] * g;
      j(r, 2) = -p[0] * p[1] * g * 2.0 * k * d;
      j(r, 3) = -p[0] * p[1] * g * 2.0 * k * d * d / p[3];
    }
    return 0;
  }
};

}  // namespace

FitResult fit_fringe(std::span<const double> x, std::span<const double> counts) {
  if (x.size() != counts.size()) throw ConfigError("fit_fringe: x and counts differ in length");
  const auto n = x.size();
  if (n < 5) throw InsufficientPoints("fit_fringe needs at least 5 points, got " + std::to_string(n));
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*hi - *lo < kTwoPi * static_cast<double>(n - 1) / static_cast<double>(n) - 1e-9) {
    throw InsufficientPoints("fit_fringe needs points spanning one full period");
  }
  for (double c : counts) {
    if (!(c >= 0.0)) throw ConfigError("fit_fringe: counts must be non-negative");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double w = 1.0 / poisson_sigma(counts[i]);
    design(k, 0) = w;
    design(k, 1) = w * std::cos(x[i]);
    design(k, 2) = w * std::sin(x[i]);
    rhs[k] = w * counts[i];
  }
  const Eigen::Matrix3d normal = design.transpose() * design;
  Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NonConvergence("fit_fringe: singular normal equations (points do not resolve the fringe)");
  }
  const Eigen::Vector3d p = ldlt.solve(design.transpose() * rhs);
  const Eigen::Matrix3d cov = ldlt.solve(Eigen::Matrix3d::Identity());
  const double a = p[0];
  const double b = p[1];
  const double c = p[2];
  if (!(a > 0.0)) throw NonConvergence("fit_fringe: non-positive fringe mean " + std::to_string(a));
  const double r = std::hypot(b, c);

  FitResult out;
  out.amplitude = a;
  out.sigma_amplitude = std::sqrt(cov(0, 0));
  out.unconstrained_visibility = r / a;
  out.phase = wrap_phase(std::atan2(c, b));
  if (r > 0.0) {
    Eigen::Vector3d g(-r / (a * a), b / (a * r), c / (a * r));
    out.sigma_visibility = std::sqrt(std::max(0.0, g.dot(cov * g)));
    Eigen::Vector3d h(0.0, -c / (r * r), b / (r * r));
    out.sigma_phase = std::sqrt(std::max(0.0, h.dot(cov * h)));
  } else {
    out.sigma_visibility = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2))) / a;
    out.sigma_phase = std::numbers::pi;
  }
  out.visibility = out.unconstrained_visibility;

  if (out.visibility > 1.0) {
    ConstrainedFringe functor{x, counts};
    Eigen::VectorXd q(3);
    q << a, std::numbers::pi / 2.0 * 0.999, out.phase;
    Eigen::LevenbergMarquardt<ConstrainedFringe> lm(functor);
    const auto status = lm.minimize(q);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
      throw NonConvergence("fit_fringe: constrained refit rejected its inputs");
    }
    out.amplitude = q[0];
    out.visibility = std::pow(std::sin(q[1]), 2);
    out.phase = wrap_phase(q[2]);
    out.constrained = true;
  }

  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double model = out.amplitude * (1.0 + out.visibility * std::cos(x[i] - out.phase));
    chi2 += std::pow((counts[i] - model) / poisson_sigma(counts[i]), 2);
  }
  out.chi2_per_dof = n > 3 ? chi2 / static_cast<double>(n - 3) : 0.0;
  return out;
}

DipFit fit_dip(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("fit_dip: x and y differ in length");
  if (x.size() < 5) throw InsufficientPoints("fit_dip needs at least 5 points");
  const double y_max = *std::max_element(y.begin(), y.end());
  if (!(y_max > 0.0)) throw NonConvergence("fit_dip: no coincidences to fit");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double x_scale = std::max(std::abs(*lo), std::abs(*hi));

  GaussianDip functor;
  for (std::size_t i = 0; i < x.size(); ++i) {
    functor.x.push_back(x[i] / x_scale);
    functor.y.push_back(y[i] / y_max);
  }
  const auto min_it = std::min_element(functor.y.begin(), functor.y.end());
  const double y_min = *min_it;
  const double center = functor.x[static_cast<std::size_t>(min_it - functor.y.begin())];
  // Width guess from the points below half depth.
  const double half = 0.5 * (1.0 + y_min);
  double left = center;
  double right = center;
  for (std::size_t i = 0; i < functor.x.size(); ++i) {
    if (functor.y[i] <= half) {
      left = std::min(left, functor.x[i]);
      right = std::max(right, functor.x[i]);
    }
  }
  Eigen::VectorXd p(4);
  p << 1.0, 1.0 - y_min, center, std::max(right - left, 0.05);
  Eigen::LevenbergMarquardt<GaussianDip> lm(functor);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !std::isfinite(p[3])) {
    throw NonConvergence("fit_dip did not converge");
  }
  return {p[0] * y_max, p[1], p[2] * x_scale, std::abs(p[3]) * x_scale};
}

double fidelity(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw ConfigError("visibility outside [0,1]");
  return (1.0 + visibility) / 2.0;
}

NetVisibility net_visibility(double v_raw, double mean, double background, double sigma_v, double sigma_mean,
                             double sigma_background) {
  if (!(background >= 0.0 && background < mean)) {
    throw ConfigError("background must satisfy 0 <= background < mean");
  }
  const double s = mean - background;
  NetVisibility out;
  out.value = v_raw * mean / s;
  const double dv = mean / s;
  const double dm = -v_raw * background / (s * s);
  const double db = v_raw * mean / (s * s);
  out.sigma = std::sqrt(std::pow(dv * sigma_v, 2) + std::pow(dm * sigma_mean, 2) + std::pow(db * sigma_background, 2));
  if (out.value > 1.0) {
    out.value = 1.0;
    out.capped = true;
  }
  return out;
}

Classification classify(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw ConfigError("visibility outside [0,1]");
  if (visibility >= kCloningLimit) return Classification::above_cloning;
  if (visibility >= kClassicalLimit) return Classification::quantum;
  return Classification::below_classical;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::below_classical:
      return "below_classical";
    case Classification::quantum:
      return "quantum";
    case Classification::above_cloning:
      return "above_cloning";
  }
  return "unknown";
}

}  // namespace tbrelay
