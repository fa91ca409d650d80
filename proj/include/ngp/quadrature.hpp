#pragma once

// Gauss-Hermite rules for integrals of the form ∫ f(z) exp(-z²) dz.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "ngp/errors.hpp"

namespace ngp {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;  // tail weights underflow quickly; kept in log form
};

namespace detail {

// Orthonormal Hermite recurrence at z. Returns (p_n, p_{n-1}) scaled so that
// p_0 = pi^{-1/4}.
inline std::pair<double, double> hermite_pair(int n, double z) {
  double p1 = std::pow(std::numbers::pi, -0.25), p2 = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
  }
  return {p1, p2};
}

inline GaussHermiteRule compute_gauss_hermite(int n) {
  // Golub-Welsch eigenvalues as starting points, then Newton on the recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(J, Eigen::EigenvaluesOnly).eigenvalues();
  GaussHermiteRule rule;
  for (int i = 0; i < n; ++i) {
    double z = ev[i];
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const auto [p, pm1] = hermite_pair(n, z);
      dp = std::sqrt(2.0 * n) * pm1;
      const double step = p / dp;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    dp = std::sqrt(2.0 * n) * hermite_pair(n, z).second;
    rule.nodes.push_back(z);
    rule.log_weights.push_back(std::log(2.0) - 2.0 * std::log(std::abs(dp)));
  }
  return rule;
}

}  // namespace detail

/// n-node rule, cached per n.
inline const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1 || n > 400) throw InvalidArgument("Gauss-Hermite node count must be in [1, 400]");
  static std::mutex m;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_hermite(n)).first;
  return it->second;
}

}  // namespace ngp
