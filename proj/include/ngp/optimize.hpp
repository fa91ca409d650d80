#pragma once

// Box-constrained BFGS with backtracking line search.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

namespace ngp {

struct BfgsOptions {
  int max_iter = 200;
  double f_tol = 1e-9;
  double g_tol = 1e-10;
  double max_step = 2.0;  // cap on the Euclidean length of a trial step
  Eigen::VectorXd lower, upper;  // empty: unbounded
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Objective returns +inf where undefined. `grad` is evaluated at points
/// where the objective is finite and receives that value.
using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

inline BfgsResult minimize_bfgs(const Objective& f, const Gradient& grad, Eigen::VectorXd x0,
                                const BfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  Eigen::VectorXd lo = opt.lower.size() == n ? opt.lower
                                             : Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = opt.upper.size() == n ? opt.upper
                                             : Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  // Never move the start point: widen the box to contain it.
  lo = lo.cwiseMin(x0);
  hi = hi.cwiseMax(x0);
  auto project = [&](Eigen::VectorXd v) { return v.cwiseMax(lo).cwiseMin(hi); };

  BfgsResult res;
  res.x = x0;
  res.f = f(x0);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || n == 0) return res;

  Eigen::VectorXd g = grad(res.x, res.f);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    if (!g.allFinite()) break;
    // Components pinned at an active bound and pushing outward are frozen.
    Eigen::VectorXd gf = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((res.x[i] <= lo[i] && g[i] > 0) || (res.x[i] >= hi[i] && g[i] < 0)) gf[i] = 0.0;
    }
    if (gf.norm() <= opt.g_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -H * gf;
    if (p.dot(gf) >= 0) {
      H.setIdentity();
      fresh = true;
      p = -gf;
    }
    const double len = p.norm();
    if (len > opt.max_step) p *= opt.max_step / len;

    double alpha = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      x_new = project(res.x + alpha * p);
      if ((x_new - res.x).norm() == 0.0) break;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * gf.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fresh) {
        res.converged = true;  // no descent possible along the gradient
        break;
      }
      H.setIdentity();
      fresh = true;
      continue;
    }
    const double df = res.f - f_new;
    const Eigen::VectorXd s = x_new - res.x;
    res.x = x_new;
    res.f = f_new;
    const Eigen::VectorXd g_new = grad(res.x, res.f);
    if (std::abs(df) <= opt.f_tol) {
      g = g_new;
      res.converged = true;
      ++res.iterations;
      break;
    }
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && std::isfinite(sy)) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
      fresh = false;
    }
    g = g_new;
  }
  return res;
}

}  // namespace ngp
