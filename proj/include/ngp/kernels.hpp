#pragma once

// Base covariance families and their closed-form mixed partial derivatives.
//
// Every family exposes derivatives of order 0..2 per spatial dimension with
// respect to each argument independently. Values for a fixed point pair are
// produced all at once by PairDerivatives so that operator-weighted kernels
// can share the expensive transcendental evaluations.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ngp/errors.hpp"

namespace ngp {

/// Spatial point; one-dimensional problems only use the first coordinate.
using Point = std::array<double, 2>;

/// Per-dimension derivative orders.
using MultiIndex = std::array<int, 2>;

inline constexpr int kMaxOrderPerDim = 2;

enum class KernelFamily { SE1D, NN1D, SE2D_ANISO };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::SE1D: return "SE1D";
    case KernelFamily::NN1D: return "NN1D";
    case KernelFamily::SE2D_ANISO: return "SE2D_ANISO";
  }
  return "?";
}

/// A covariance family plus its hyperparameters, stored as logarithms.
///
///   SE1D        gamma2 * exp(-w (x-x')^2 / 2)                 (gamma2, w)
///   NN1D        arcsine / neural-network kernel               (sigma0_2, sigma2)
///   SE2D_ANISO  gamma2 * exp(-w1 dx1^2 / 2 - w2 dx2^2 / 2)    (gamma2, w1, w2)
struct KernelSpec {
  KernelFamily family = KernelFamily::SE1D;
  std::vector<double> log_theta;

  static KernelSpec se1d(double gamma2, double w) {
    return {KernelFamily::SE1D, {std::log(gamma2), std::log(w)}};
  }
  static KernelSpec nn1d(double sigma0_2, double sigma2) {
    return {KernelFamily::NN1D, {std::log(sigma0_2), std::log(sigma2)}};
  }
  static KernelSpec se2d(double gamma2, double w1, double w2) {
    return {KernelFamily::SE2D_ANISO, {std::log(gamma2), std::log(w1), std::log(w2)}};
  }

  static std::size_t param_count(KernelFamily f) { return f == KernelFamily::SE2D_ANISO ? 3 : 2; }
  std::size_t num_params() const { return param_count(family); }
  int dim() const { return family == KernelFamily::SE2D_ANISO ? 2 : 1; }

  std::vector<std::string> param_names() const {
    switch (family) {
      case KernelFamily::SE1D: return {"gamma2", "w"};
      case KernelFamily::NN1D: return {"sigma0_2", "sigma2"};
      case KernelFamily::SE2D_ANISO: return {"gamma2", "w1", "w2"};
    }
    return {};
  }

  /// Hyperparameter value in natural (exponentiated) scale.
  double value(std::size_t i) const { return std::exp(log_theta.at(i)); }

  void validate() const {
    if (log_theta.size() != num_params()) {
      throw InvalidArgument("kernel " + to_string(family) + " expects " +
                            std::to_string(num_params()) + " hyperparameters, got " +
                            std::to_string(log_theta.size()));
    }
    for (double t : log_theta) {
      if (!std::isfinite(t)) throw InvalidArgument("non-finite log hyperparameter");
    }
  }
};

/// Derivative orders applied to the first (left) and second (right) argument.
struct DerivOrder {
  MultiIndex left{0, 0};
  MultiIndex right{0, 0};

  static DerivOrder of(int left, int right) { return {{left, 0}, {right, 0}}; }
  int total() const { return left[0] + left[1] + right[0] + right[1]; }
  friend bool operator==(const DerivOrder&, const DerivOrder&) = default;
};

inline std::string to_string(const DerivOrder& o) {
  auto idx = [](const MultiIndex& m) {
    return "(" + std::to_string(m[0]) + "," + std::to_string(m[1]) + ")";
  };
  return idx(o.left) + "x" + idx(o.right);
}

namespace detail {

using Table3 = std::array<std::array<double, 3>, 3>;

inline void check_order(const MultiIndex& m, int dim) {
  for (int d = 0; d < 2; ++d) {
    if (m[d] < 0 || m[d] > kMaxOrderPerDim || (d >= dim && m[d] != 0)) {
      throw OrderOutOfRange("derivative order (" + std::to_string(m[0]) + "," +
                            std::to_string(m[1]) + ") unsupported for a " +
                            std::to_string(dim) + "-D kernel");
    }
  }
}

// d^a/dx^a d^b/dx'^b of exp(-w (x-x')^2 / 2), for a, b in 0..2.
// With r = x - x', d/dx' = -d/dr, so entry (a,b) = (-1)^b E^{(a+b)}(r).
inline Table3 se_factor(double r, double w) {
  const double e = std::exp(-0.5 * w * r * r);
  const double wr = w * r;
  const double wr2 = w * r * r;
  const std::array<double, 5> d = {
      e,
      -wr * e,
      w * (wr2 - 1.0) * e,
      -w * wr * (wr2 - 3.0) * e,
      w * w * (wr2 * (wr2 - 6.0) + 3.0) * e,
  };
  Table3 t{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) t[a][b] = (b % 2 == 0 ? 1.0 : -1.0) * d[a + b];
  return t;
}

// Mixed partials of the arcsine kernel
//   k = (2/pi) asin(z),  z = 2 a h(x) g(x'),
//   a = s0 + s x x',  h = (1 + 2 s0 + 2 s x^2)^(-1/2),  g likewise in x'.
// z partials follow from Leibniz (a is bilinear); k partials from the chain
// rule with the derivatives of asin up to fourth order.
inline Table3 nn_table(double x, double xp, double s0, double s) {
  const double px = 1.0 + 2.0 * s0 + 2.0 * s * x * x;
  const double pxp = 1.0 + 2.0 * s0 + 2.0 * s * xp * xp;
  auto inv_sqrt_derivs = [s](double p, double t) {
    const double p12 = 1.0 / std::sqrt(p);
    const double p32 = p12 / p;
    const double p52 = p32 / p;
    return std::array<double, 3>{p12, -2.0 * s * t * p32,
                                 -2.0 * s * p32 + 12.0 * s * s * t * t * p52};
  };
  const auto h = inv_sqrt_derivs(px, x);
  const auto g = inv_sqrt_derivs(pxp, xp);

  // a_{ij}: only (0,0), (1,0), (0,1), (1,1) are nonzero.
  const double a[2][2] = {{s0 + s * x * xp, s * x}, {s * xp, s}};

  Table3 z{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int i1 = 0; i1 <= std::min(i, 1); ++i1) {
        for (int j1 = 0; j1 <= std::min(j, 1); ++j1) {
          const double ci = (i == 2 && i1 == 1) ? 2.0 : 1.0;
          const double cj = (j == 2 && j1 == 1) ? 2.0 : 1.0;
          acc += ci * cj * a[i1][j1] * h[i - i1] * g[j - j1];
        }
      }
      z[i][j] = 2.0 * acc;
    }
  }

  double zz = z[0][0];
  if (std::abs(zz) > 1.0) {
    if (std::abs(zz) - 1.0 > 1e-12) {
      throw DomainError("arcsine kernel argument " + std::to_string(zz) + " outside [-1, 1]");
    }
    zz = std::copysign(1.0, zz);
  }
  const double om = 1.0 - zz * zz;
  if (om <= 0.0) throw DomainError("arcsine kernel derivatives singular at |z| = 1");
  const double r12 = 1.0 / std::sqrt(om);
  const double r32 = r12 / om;
  const double r52 = r32 / om;
  const double r72 = r52 / om;
  const double f0 = std::asin(zz);
  const double f1 = r12;
  const double f2 = zz * r32;
  const double f3 = (1.0 + 2.0 * zz * zz) * r52;
  const double f4 = (9.0 * zz + 6.0 * zz * zz * zz) * r72;

  const double z10 = z[1][0], z01 = z[0][1], z20 = z[2][0], z02 = z[0][2];
  const double z11 = z[1][1], z21 = z[2][1], z12 = z[1][2], z22 = z[2][2];

  Table3 k{};
  k[0][0] = f0;
  k[1][0] = f1 * z10;
  k[0][1] = f1 * z01;
  k[2][0] = f2 * z10 * z10 + f1 * z20;
  k[0][2] = f2 * z01 * z01 + f1 * z02;
  k[1][1] = f2 * z10 * z01 + f1 * z11;
  k[2][1] = f3 * z01 * z10 * z10 + f2 * (2.0 * z10 * z11 + z01 * z20) + f1 * z21;
  k[1][2] = f3 * z10 * z01 * z01 + f2 * (2.0 * z01 * z11 + z10 * z02) + f1 * z12;
  k[2][2] = f4 * z01 * z01 * z10 * z10 +
            f3 * (z02 * z10 * z10 + 4.0 * z01 * z10 * z11 + z01 * z01 * z20) +
            f2 * (2.0 * z11 * z11 + 2.0 * z10 * z12 + z02 * z20 + 2.0 * z01 * z21) + f1 * z22;

  constexpr double c = 2.0 / std::numbers::pi;
  for (auto& row : k)
    for (double& v : row) v *= c;
  return k;
}

}  // namespace detail

/// All mixed partials (orders 0..2 per dimension and argument) of one kernel
/// at one point pair. Two-dimensional kernels are separable, so each entry is
/// a product of per-dimension factors.
class PairDerivatives {
 public:
  PairDerivatives(const KernelSpec& spec, const Point& x, const Point& xp) : dim_(spec.dim()) {
    switch (spec.family) {
      case KernelFamily::SE1D:
        scale_ = spec.value(0);
        factor_[0] = detail::se_factor(x[0] - xp[0], spec.value(1));
        break;
      case KernelFamily::NN1D:
        scale_ = 1.0;
        factor_[0] = detail::nn_table(x[0], xp[0], spec.value(0), spec.value(1));
        break;
      case KernelFamily::SE2D_ANISO:
        scale_ = spec.value(0);
        factor_[0] = detail::se_factor(x[0] - xp[0], spec.value(1));
        factor_[1] = detail::se_factor(x[1] - xp[1], spec.value(2));
        break;
    }
  }

  double operator()(const MultiIndex& left, const MultiIndex& right) const {
    detail::check_order(left, dim_);
    detail::check_order(right, dim_);
    double v = scale_ * factor_[0][left[0]][right[0]];
    if (dim_ == 2) v *= factor_[1][left[1]][right[1]];
    return v;
  }
  double operator()(const DerivOrder& o) const { return (*this)(o.left, o.right); }

  /// Unchecked lookup; orders must already be validated.
  double at(const MultiIndex& left, const MultiIndex& right) const noexcept {
    double v = scale_ * factor_[0][left[0]][right[0]];
    if (dim_ == 2) v *= factor_[1][left[1]][right[1]];
    return v;
  }

 private:
  int dim_;
  double scale_ = 1.0;
  std::array<detail::Table3, 2> factor_{};
};

inline double eval_se1d(double x, double xp, const KernelSpec& spec, const DerivOrder& ord) {
  if (spec.family != KernelFamily::SE1D) throw InvalidArgument("eval_se1d requires an SE1D kernel");
  detail::check_order(ord.left, 1);
  detail::check_order(ord.right, 1);
  return PairDerivatives(spec, {x, 0.0}, {xp, 0.0})(ord);
}

inline double eval_nn1d(double x, double xp, const KernelSpec& spec, const DerivOrder& ord) {
  if (spec.family != KernelFamily::NN1D) throw InvalidArgument("eval_nn1d requires an NN1D kernel");
  detail::check_order(ord.left, 1);
  detail::check_order(ord.right, 1);
  return PairDerivatives(spec, {x, 0.0}, {xp, 0.0})(ord);
}

inline double eval_se2d(const Point& x, const Point& xp, const KernelSpec& spec,
                        const DerivOrder& ord) {
  if (spec.family != KernelFamily::SE2D_ANISO) {
    throw InvalidArgument("eval_se2d requires an SE2D_ANISO kernel");
  }
  detail::check_order(ord.left, 2);
  detail::check_order(ord.right, 2);
  return PairDerivatives(spec, x, xp)(ord);
}

/// Family-dispatching evaluation.
inline double eval_kernel(const Point& x, const Point& xp, const KernelSpec& spec,
                          const DerivOrder& ord) {
  switch (spec.family) {
    case KernelFamily::SE1D: return eval_se1d(x[0], xp[0], spec, ord);
    case KernelFamily::NN1D: return eval_nn1d(x[0], xp[0], spec, ord);
    case KernelFamily::SE2D_ANISO: return eval_se2d(x, xp, spec, ord);
  }
  return 0.0;
}

}  // namespace ngp
