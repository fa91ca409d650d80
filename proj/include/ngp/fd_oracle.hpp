#pragma once

// Finite-difference oracle for kernel derivatives.
//
// The oracle differentiates its own long-double implementation of each base
// kernel, so it shares no code with the closed forms it checks. Central
// differences use step 1e-4 for total order <= 2 and step 1e-3 with one
// Richardson extrapolation (h, h/2) above that.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ngp/kernels.hpp"

namespace ngp::validation {

using Real = long double;

/// Order-(0,0) kernel in extended precision.
inline Real base_kernel(const KernelSpec& spec, Real x0, Real x1, Real y0, Real y1) {
  switch (spec.family) {
    case KernelFamily::SE1D: {
      const Real g = std::exp(static_cast<Real>(spec.log_theta[0]));
      const Real w = std::exp(static_cast<Real>(spec.log_theta[1]));
      const Real r = x0 - y0;
      return g * std::exp(-w * r * r / 2);
    }
    case KernelFamily::NN1D: {
      const Real s0 = std::exp(static_cast<Real>(spec.log_theta[0]));
      const Real s = std::exp(static_cast<Real>(spec.log_theta[1]));
      const Real num = 2 * (s0 + s * x0 * y0);
      const Real den = std::sqrt((1 + 2 * (s0 + s * x0 * x0)) * (1 + 2 * (s0 + s * y0 * y0)));
      return 2 / std::numbers::pi_v<Real> * std::asin(num / den);
    }
    case KernelFamily::SE2D_ANISO: {
      const Real g = std::exp(static_cast<Real>(spec.log_theta[0]));
      const Real w1 = std::exp(static_cast<Real>(spec.log_theta[1]));
      const Real w2 = std::exp(static_cast<Real>(spec.log_theta[2]));
      const Real r0 = x0 - y0, r1 = x1 - y1;
      return g * std::exp(-w1 * r0 * r0 / 2 - w2 * r1 * r1 / 2);
    }
  }
  return 0;
}

namespace detail {

struct Stencil {
  std::vector<std::pair<int, Real>> taps;  // (offset in units of h, weight * h^order)
};

inline const Stencil& stencil(int order) {
  static const Stencil s0{{{0, 1}}};
  static const Stencil s1{{{1, 0.5L}, {-1, -0.5L}}};
  static const Stencil s2{{{1, 1}, {0, -2}, {-1, 1}}};
  return order == 0 ? s0 : order == 1 ? s1 : s2;
}

inline Real central_difference(const KernelSpec& spec, const Point& x, const Point& y,
                               const DerivOrder& ord, Real h) {
  const std::array<int, 4> orders = {ord.left[0], ord.left[1], ord.right[0], ord.right[1]};
  const auto& s0 = stencil(orders[0]);
  const auto& s1 = stencil(orders[1]);
  const auto& s2 = stencil(orders[2]);
  const auto& s3 = stencil(orders[3]);
  Real acc = 0;
  for (const auto& [o0, w0] : s0.taps)
    for (const auto& [o1, w1] : s1.taps)
      for (const auto& [o2, w2] : s2.taps)
        for (const auto& [o3, w3] : s3.taps) {
          acc += w0 * w1 * w2 * w3 *
                 base_kernel(spec, x[0] + o0 * h, x[1] + o1 * h, y[0] + o2 * h, y[1] + o3 * h);
        }
  return acc / std::pow(h, static_cast<Real>(ord.total()));
}

}  // namespace detail

/// Finite-difference estimate of the requested mixed partial.
inline double fd_derivative(const KernelSpec& spec, const Point& x, const Point& y,
                            const DerivOrder& ord) {
  if (ord.total() <= 2) {
    return static_cast<double>(detail::central_difference(spec, x, y, ord, 1e-4L));
  }
  const Real h = 1e-3L;
  const Real coarse = detail::central_difference(spec, x, y, ord, h);
  const Real fine = detail::central_difference(spec, x, y, ord, h / 2);
  return static_cast<double>((4 * fine - coarse) / 3);
}

/// Tolerance on relative error for a given derivative order.
inline double fd_tolerance(const DerivOrder& ord) { return ord.total() <= 2 ? 1e-5 : 1e-4; }

using KernelEvaluator =
    std::function<double(const Point&, const Point&, const KernelSpec&, const DerivOrder&)>;

struct CheckResult {
  KernelFamily family;
  DerivOrder order;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error <= tolerance; }
};

/// Derivative orders exercised by the benchmark operators, per family.
inline std::vector<std::pair<KernelFamily, DerivOrder>> required_checks() {
  std::vector<std::pair<KernelFamily, DerivOrder>> out;
  const std::vector<std::pair<int, int>> one_d = {{1, 0}, {0, 1}, {1, 1}, {2, 0},
                                                  {0, 2}, {2, 1}, {1, 2}, {2, 2}};
  for (auto fam : {KernelFamily::SE1D, KernelFamily::NN1D}) {
    for (auto [l, r] : one_d) out.emplace_back(fam, DerivOrder::of(l, r));
  }
  const std::vector<MultiIndex> two_d = {{0, 0}, {0, 1}, {2, 0}, {0, 2}};
  for (const auto& l : two_d) {
    for (const auto& r : two_d) {
      if (l == MultiIndex{0, 0} && r == MultiIndex{0, 0}) continue;
      out.emplace_back(KernelFamily::SE2D_ANISO, DerivOrder{l, r});
    }
  }
  return out;
}

/// Random hyperparameters and point pairs for one family.
struct Sample {
  KernelSpec spec;
  Point x, y;
};

inline std::vector<Sample> draw_samples(KernelFamily family, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
  };
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Sample s;
    switch (family) {
      case KernelFamily::SE1D:
        s.spec = KernelSpec::se1d(log_uniform(0.5, 2.0), log_uniform(1.0, 20.0));
        s.x = {-1.0 + 2.0 * unit(rng), 0.0};
        s.y = {-1.0 + 2.0 * unit(rng), 0.0};
        break;
      case KernelFamily::NN1D:
        s.spec = KernelSpec::nn1d(log_uniform(0.1, 2.0), log_uniform(0.5, 20.0));
        s.x = {-1.0 + 2.0 * unit(rng), 0.0};
        s.y = {-1.0 + 2.0 * unit(rng), 0.0};
        break;
      case KernelFamily::SE2D_ANISO:
        s.spec = KernelSpec::se2d(log_uniform(0.5, 2.0), log_uniform(1.0, 20.0),
                                  log_uniform(1.0, 20.0));
        s.x = {unit(rng), unit(rng)};
        s.y = {unit(rng), unit(rng)};
        break;
    }
    out.push_back(s);
  }
  return out;
}

/// Maximum relative error of `eval` against the FD oracle. Relative errors
/// are taken against max(|exact|, 1e-2 * largest |exact| in the sample) so
/// that zero crossings of a derivative do not dominate.
inline CheckResult check_derivative(const KernelEvaluator& eval, KernelFamily family,
                                    const DerivOrder& ord, int pairs = 100,
                                    std::uint64_t seed = 20170314) {
  const auto samples = draw_samples(family, pairs, seed);
  std::vector<double> exact(samples.size()), approx(samples.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    exact[i] = eval(samples[i].x, samples[i].y, samples[i].spec, ord);
    approx[i] = fd_derivative(samples[i].spec, samples[i].x, samples[i].y, ord);
    scale = std::max(scale, std::abs(exact[i]));
  }
  CheckResult res{family, ord, 0.0, fd_tolerance(ord)};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double denom = std::max(std::abs(exact[i]), 1e-2 * scale);
    double err = denom > 0.0 ? std::abs(exact[i] - approx[i]) / denom
                             : std::abs(exact[i] - approx[i]);
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    res.max_rel_error = std::max(res.max_rel_error, err);
  }
  return res;
}

inline std::vector<CheckResult> run_checks(const KernelEvaluator& eval, int pairs = 100) {
  std::vector<CheckResult> out;
  for (const auto& [fam, ord] : required_checks()) {
    out.push_back(check_derivative(eval, fam, ord, pairs));
  }
  return out;
}

/// Prints one line per check; returns 0 if every check passed, 1 otherwise.
inline int validate_kernels(const KernelEvaluator& eval, std::ostream& os, int pairs = 100) {
  const auto results = run_checks(eval, pairs);
  bool ok = true;
  os << std::left << std::setw(12) << "family" << std::setw(14) << "order" << std::setw(14)
     << "max_rel_err" << std::setw(10) << "tol"
     << "status\n";
  for (const auto& r : results) {
    ok = ok && r.passed();
    os << std::left << std::setw(12) << to_string(r.family) << std::setw(14) << to_string(r.order)
       << std::setw(14) << std::setprecision(3) << std::scientific << r.max_rel_error
       << std::setw(10) << r.tolerance << std::defaultfloat << (r.passed() ? "ok" : "FAIL")
       << "\n";
  }
  os << results.size() << " checks, " << (ok ? "all passed" : "FAILURES") << "\n";
  return ok ? 0 : 1;
}

inline int validate_kernels(std::ostream& os) {
  return validate_kernels(
      [](const Point& x, const Point& y, const KernelSpec& s, const DerivOrder& o) {
        return eval_kernel(x, y, s, o);
      },
      os);
}

}  // namespace ngp::validation
