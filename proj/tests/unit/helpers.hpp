#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbrelay/fock.hpp"

namespace tbrelay::testing {

inline std::shared_ptr<ModeRegistry> line_registry(int modes, const std::string& name = "m") {
  auto reg = std::make_shared<ModeRegistry>(kDefaultMaxBins);
  for (int i = 0; i < modes; ++i) reg->add({name + std::to_string(i), 0, 0});
  return reg;
}

inline FockState basis(const std::shared_ptr<const ModeRegistry>& reg, Occupation occ, int max_photons = 4) {
  return FockState::from_terms(reg, max_photons, {{std::move(occ), 1.0}});
}

// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) z(i, j) = {g(rng), g(rng)};
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
  return q;
}

// Permanent by Ryser's formula; fine for the 4x4 sizes used here.
inline std::complex<double> permanent(const Eigen::MatrixXcd& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1.0;
  std::complex<double> total = 0.0;
  for (unsigned s = 1; s < (1U << n); ++s) {
    std::complex<double> prod = 1.0;
    for (int i = 0; i < n; ++i) {
      std::complex<double> row = 0.0;
      for (int j = 0; j < n; ++j) {
        if (s & (1U << j)) row += a(i, j);
      }
      prod *= row;
    }
    total += (std::popcount(s) % 2 == n % 2 ? 1.0 : -1.0) * prod;
  }
  return total;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// <out| U |in> for Fock basis states under a^dagger_j -> sum_k U(k, j) a^dagger_k.
inline std::complex<double> transition_amplitude(const Eigen::MatrixXcd& u, const Occupation& in, const Occupation& out) {
  std::vector<int> rows;
  std::vector<int> cols;
  double norm = 1.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (int r = 0; r < out[k]; ++r) rows.push_back(static_cast<int>(k));
    norm *= factorial(out[k]);
  }
  for (std::size_t j = 0; j < in.size(); ++j) {
    for (int r = 0; r < in[j]; ++r) cols.push_back(static_cast<int>(j));
    norm *= factorial(in[j]);
  }
  if (rows.size() != cols.size()) return 0.0;
  Eigen::MatrixXcd sub(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) sub(a, b) = u(rows[a], cols[b]);
  }
  return permanent(sub) / std::sqrt(norm);
}

// All occupations of `modes` modes with exactly `photons` photons.
inline std::vector<Occupation> occupations(int modes, int photons) {
  std::vector<Occupation> out;
  Occupation cur(static_cast<std::size_t>(modes), 0);
  std::function<void(int, int)> rec = [&](int m, int left) {
    if (m == modes - 1) {
      cur[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(left);
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(k);
      rec(m + 1, left - k);
    }
  };
  rec(0, photons);
  return out;
}

}  // namespace tbrelay::testing
