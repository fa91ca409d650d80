#pragma once

// Formal linear differential operators and their bilinear application to a
// base kernel: (A_x B_x' k)(x, x').

#include <functional>
#include <utility>
#include <vector>

#include "ngp/kernels.hpp"

namespace ngp {

using ScalarField = std::function<double(const Point&)>;
using KernelFunction = std::function<double(const Point&, const Point&)>;

/// One term `scale * coeff(x) * d^order`. An empty `coeff` means constant.
struct OpTerm {
  double scale = 1.0;
  ScalarField coeff;
  MultiIndex order{0, 0};

  double weight_at(const Point& x) const { return coeff ? scale * coeff(x) : scale; }
  bool is_constant() const { return !coeff; }
};

/// Sum of coefficient-weighted mixed partial derivatives.
class DiffOp {
 public:
  DiffOp() = default;
  explicit DiffOp(std::vector<OpTerm> terms) : terms_(std::move(terms)) {}

  static DiffOp zero() { return {}; }
  static DiffOp identity() { return DiffOp({OpTerm{1.0, {}, {0, 0}}}); }
  static DiffOp derivative(MultiIndex order, double scale = 1.0) {
    return DiffOp({OpTerm{scale, {}, order}});
  }
  /// d/dx in one dimension.
  static DiffOp d1(double scale = 1.0) { return derivative({1, 0}, scale); }
  /// d^2/dx^2 in one dimension.
  static DiffOp d2(double scale = 1.0) { return derivative({2, 0}, scale); }
  /// Laplacian in two dimensions.
  static DiffOp laplacian2d(double scale = 1.0) {
    return DiffOp({OpTerm{scale, {}, {2, 0}}, OpTerm{scale, {}, {0, 2}}});
  }

  const std::vector<OpTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Multiplies every coefficient by a spatially varying field.
  DiffOp times(const ScalarField& field) const {
    DiffOp out;
    for (const auto& t : terms_) {
      OpTerm n = t;
      if (t.coeff) {
        auto inner = t.coeff;
        n.coeff = [inner, field](const Point& x) { return inner(x) * field(x); };
      } else {
        n.coeff = field;
      }
      out.terms_.push_back(std::move(n));
    }
    return out;
  }

  DiffOp& operator+=(const DiffOp& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator*(double c, DiffOp a) {
    for (auto& t : a.terms_) t.scale *= c;
    return a;
  }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a += (-1.0) * b; }

  /// outer ∘ inner. Requires the inner coefficients to be constant wherever
  /// the outer term differentiates (no product rule on coefficient fields).
  friend DiffOp compose(const DiffOp& outer, const DiffOp& inner) {
    DiffOp out;
    for (const auto& o : outer.terms_) {
      const bool differentiates = o.order[0] + o.order[1] > 0;
      for (const auto& i : inner.terms_) {
        if (differentiates && !i.is_constant()) {
          throw InvalidArgument("compose: derivative of a variable-coefficient operator");
        }
        OpTerm t;
        t.scale = o.scale * i.scale;
        if (o.coeff && i.coeff) {
          auto a = o.coeff, b = i.coeff;
          t.coeff = [a, b](const Point& x) { return a(x) * b(x); };
        } else {
          t.coeff = o.coeff ? o.coeff : i.coeff;
        }
        t.order = {o.order[0] + i.order[0], o.order[1] + i.order[1]};
        out.terms_.push_back(std::move(t));
      }
    }
    return out;
  }

 private:
  std::vector<OpTerm> terms_;
};

/// Returns (x, x') -> sum_a sum_b cL_a(x) cR_b(x') d^{a}_x d^{b}_{x'} k(x, x').
inline KernelFunction apply_operator_pair(DiffOp left, DiffOp right, KernelSpec base) {
  base.validate();
  for (const auto* op : {&left, &right}) {
    for (const auto& t : op->terms()) detail::check_order(t.order, base.dim());
  }
  return [left = std::move(left), right = std::move(right), base = std::move(base)](
             const Point& x, const Point& xp) {
    if (left.empty() || right.empty()) return 0.0;
    const PairDerivatives d(base, x, xp);
    double acc = 0.0;
    for (const auto& a : left.terms()) {
      const double wa = a.weight_at(x);
      if (wa == 0.0) continue;
      for (const auto& b : right.terms()) {
        acc += wa * b.weight_at(xp) * d(a.order, b.order);
      }
    }
    return acc;
  };
}

}  // namespace ngp
