#pragma once

// Multi-output covariance generated by linear operators acting on mutually
// independent Gaussian process priors.
//
// Each latent output (label) is a sum of operator images of the priors,
//   label = sum_p A_p g_p,
// so every block is cov(label_i(x), label_j(x')) = sum_p A_{i,p,x} A_{j,p,x'} k_p(x, x').
// Labels carrying anchors are point functionals: their value at any location is
// sum_w weight_w * source(anchor_w), e.g. a periodic difference u(1) - u(0).
// Symmetry entry(i,j)(x,x') = entry(j,i)(x',x) holds by construction.

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ngp/operators.hpp"

namespace ngp {

struct LabelPart {
  std::size_t prior = 0;
  DiffOp op;
};

struct Anchor {
  double weight = 1.0;
  Point at{0.0, 0.0};
};

struct Label {
  std::string name;
  std::vector<LabelPart> parts;
  std::vector<Anchor> anchors;
  std::optional<std::size_t> noise;
};

struct NoiseParam {
  std::string name;
  double log_var = std::log(1e-8);
  bool trainable = false;
};

struct NamedPrior {
  std::string name;
  KernelSpec spec;
};

/// Operator terms of one label evaluated at concrete points. Independent of
/// the hyperparameters, so it can be reused across likelihood evaluations.
struct PreparedLabel {
  struct Term {
    double weight;
    MultiIndex order;
  };
  struct Site {
    Point at;
    std::vector<Term> terms;
  };
  struct Part {
    std::size_t prior;
    std::vector<std::vector<Site>> sites;  // per point
  };
  std::size_t label = 0;
  std::size_t count = 0;
  std::vector<Part> parts;
};

class BlockKernel {
 public:
  std::size_t add_prior(std::string name, KernelSpec spec) {
    spec.validate();
    priors_.push_back({std::move(name), std::move(spec)});
    return priors_.size() - 1;
  }

  std::size_t add_noise(std::string name, double variance, bool trainable) {
    if (!(variance > 0.0)) throw InvalidArgument("noise variance must be positive");
    noise_.push_back({std::move(name), std::log(variance), trainable});
    return noise_.size() - 1;
  }

  /// Adds a label; parts acting on the same prior are merged.
  std::size_t add_label(Label label) {
    if (find_label(label.name)) throw InvalidArgument("duplicate label '" + label.name + "'");
    std::vector<LabelPart> merged;
    for (auto& part : label.parts) {
      if (part.prior >= priors_.size()) throw InvalidArgument("label references unknown prior");
      for (const auto& t : part.op.terms()) detail::check_order(t.order, priors_[part.prior].spec.dim());
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const LabelPart& m) { return m.prior == part.prior; });
      if (it == merged.end()) {
        merged.push_back(std::move(part));
      } else {
        it->op += part.op;
      }
    }
    label.parts = std::move(merged);
    if (label.noise && *label.noise >= noise_.size()) {
      throw InvalidArgument("label references unknown noise parameter");
    }
    labels_.push_back(std::move(label));
    return labels_.size() - 1;
  }

  /// Adds `name := op ∘ source`, e.g. a Neumann derivative of a solution label.
  std::size_t add_derived_label(std::string name, const std::string& source, const DiffOp& op,
                                std::optional<std::size_t> noise = {}) {
    const Label& src = labels_.at(label_index(source));
    Label out{std::move(name), {}, src.anchors, noise};
    for (const auto& part : src.parts) out.parts.push_back({part.prior, compose(op, part.op)});
    return add_label(std::move(out));
  }

  /// Adds `name := sum_w weight_w * source(anchor_w)`.
  std::size_t add_functional_label(std::string name, const std::string& source,
                                   std::vector<Anchor> anchors,
                                   std::optional<std::size_t> noise = {}) {
    const Label& src = labels_.at(label_index(source));
    if (!src.anchors.empty()) throw InvalidArgument("functional of a functional label");
    return add_label(Label{std::move(name), src.parts, std::move(anchors), noise});
  }

  void set_label_noise(const std::string& label, std::optional<std::size_t> noise) {
    if (noise && *noise >= noise_.size()) throw InvalidArgument("unknown noise parameter");
    labels_.at(label_index(label)).noise = noise;
  }

  std::optional<std::size_t> find_prior(const std::string& name) const {
    for (std::size_t i = 0; i < priors_.size(); ++i)
      if (priors_[i].name == name) return i;
    return std::nullopt;
  }

  const std::vector<NamedPrior>& priors() const { return priors_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<NoiseParam>& noise() const { return noise_; }
  const Label& label(std::size_t i) const { return labels_.at(i); }

  std::optional<std::size_t> find_label(const std::string& name) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t label_index(const std::string& name) const {
    if (auto i = find_label(name)) return *i;
    throw UnknownLabel(name);
  }

  double noise_variance(std::size_t label) const {
    const auto& l = labels_.at(label);
    return l.noise ? std::exp(noise_[*l.noise].log_var) : 0.0;
  }

  // ---- trainable parameter vector: prior log-hyperparameters, then trainable noise log-variances

  std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto& p : priors_) n += p.spec.num_params();
    for (const auto& s : noise_) n += s.trainable ? 1 : 0;
    return n;
  }

  Eigen::VectorXd params() const {
    Eigen::VectorXd theta(num_params());
    std::size_t k = 0;
    for (const auto& p : priors_)
      for (double t : p.spec.log_theta) theta[k++] = t;
    for (const auto& s : noise_)
      if (s.trainable) theta[k++] = s.log_var;
    return theta;
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    for (const auto& p : priors_)
      for (const auto& n : p.spec.param_names()) out.push_back(p.name + "." + n);
    for (const auto& s : noise_)
      if (s.trainable) out.push_back(s.name);
    return out;
  }

  /// Index of the prior owning parameter `k`, or nullopt for a noise parameter.
  std::optional<std::size_t> prior_of_param(std::size_t k) const {
    for (std::size_t p = 0; p < priors_.size(); ++p) {
      const auto n = priors_[p].spec.num_params();
      if (k < n) return p;
      k -= n;
    }
    return std::nullopt;
  }

  void set_params(const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != num_params()) {
      throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) +
                            " entries, expected " + std::to_string(num_params()));
    }
    std::size_t k = 0;
    for (auto& p : priors_)
      for (double& t : p.spec.log_theta) t = theta[k++];
    for (auto& s : noise_)
      if (s.trainable) s.log_var = theta[k++];
  }

  BlockKernel with_params(const Eigen::VectorXd& theta) const {
    BlockKernel out = *this;
    out.set_params(theta);
    return out;
  }

  // ---- evaluation

  PreparedLabel prepare(std::size_t label_idx, std::span<const Point> points) const {
    const Label& l = labels_.at(label_idx);
    PreparedLabel out;
    out.label = label_idx;
    out.count = points.size();
    for (const auto& part : l.parts) {
      PreparedLabel::Part pp{part.prior, {}};
      pp.sites.resize(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (l.anchors.empty()) {
          pp.sites[i].push_back(make_site(part.op, points[i], 1.0));
        } else {
          for (const auto& a : l.anchors) pp.sites[i].push_back(make_site(part.op, a.at, a.weight));
        }
      }
      out.parts.push_back(std::move(pp));
    }
    return out;
  }

  /// Covariance block between prepared labels. With `only_prior`, the
  /// contribution of that prior alone.
  Eigen::MatrixXd cross(const PreparedLabel& a, const PreparedLabel& b,
                        std::optional<std::size_t> only_prior = {}) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.count, b.count);
    const bool same = (&a == &b);
    for (const auto& pa : a.parts) {
      if (only_prior && pa.prior != *only_prior) continue;
      for (const auto& pb : b.parts) {
        if (pb.prior != pa.prior) continue;
        const KernelSpec& spec = priors_[pa.prior].spec;
        for (std::size_t i = 0; i < a.count; ++i) {
          for (std::size_t j = same ? i : 0; j < b.count; ++j) {
            double acc = 0.0;
            for (const auto& sa : pa.sites[i]) {
              for (const auto& sb : pb.sites[j]) {
                const PairDerivatives d(spec, sa.at, sb.at);
                for (const auto& ta : sa.terms)
                  for (const auto& tb : sb.terms) acc += ta.weight * tb.weight * d.at(ta.order, tb.order);
              }
            }
            out(i, j) += acc;
          }
        }
      }
    }
    if (same) out.template triangularView<Eigen::StrictlyLower>() = out.transpose();
    return out;
  }

  /// Scalar covariance function between two labels.
  KernelFunction entry(std::size_t i, std::size_t j) const {
    labels_.at(i);
    labels_.at(j);
    return [self = *this, i, j](const Point& x, const Point& xp) {
      const Point px[1] = {x};
      const Point pxp[1] = {xp};
      const auto a = self.prepare(i, px);
      const auto b = self.prepare(j, pxp);
      return self.cross(a, b)(0, 0);
    };
  }
  KernelFunction entry(const std::string& i, const std::string& j) const {
    return entry(label_index(i), label_index(j));
  }

  /// True when the two labels share at least one prior (nonzero block).
  bool correlated(std::size_t i, std::size_t j) const {
    for (const auto& a : labels_.at(i).parts)
      for (const auto& b : labels_.at(j).parts)
        if (a.prior == b.prior) return true;
    return false;
  }

 private:
  static PreparedLabel::Site make_site(const DiffOp& op, const Point& at, double weight) {
    PreparedLabel::Site s{at, {}};
    for (const auto& t : op.terms()) {
      const double w = weight * t.weight_at(at);
      if (w != 0.0) s.terms.push_back({w, t.order});
    }
    return s;
  }

  std::vector<NamedPrior> priors_;
  std::vector<Label> labels_;
  std::vector<NoiseParam> noise_;
};

}  // namespace ngp
