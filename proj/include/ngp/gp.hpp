#pragma once

// Block covariance assembly, jittered Cholesky, marginal likelihood training,
// posterior prediction and uncertainty propagation through artificial data.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ngp/block_kernel.hpp"
#include "ngp/optimize.hpp"

namespace ngp {

/// Observations of one label. Blocks with `state_offset` hold artificial data
/// whose values are the entries [offset, offset + size) of a GaussianState.
struct DataBlock {
  std::string label;
  std::vector<Point> locations;
  Eigen::VectorXd values;
  std::optional<std::size_t> state_offset;
};

struct TrainingSet {
  std::vector<DataBlock> blocks;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.locations.size();
    return n;
  }
  Eigen::VectorXd targets() const {
    Eigen::VectorXd y(size());
    Eigen::Index k = 0;
    for (const auto& b : blocks) {
      y.segment(k, b.values.size()) = b.values;
      k += b.values.size();
    }
    return y;
  }
  void validate(const BlockKernel& bk) const {
    for (const auto& b : blocks) {
      bk.label_index(b.label);
      if (static_cast<std::size_t>(b.values.size()) != b.locations.size()) {
        throw InvalidArgument("block '" + b.label + "': " + std::to_string(b.locations.size()) +
                              " locations but " + std::to_string(b.values.size()) + " values");
      }
    }
  }
};

/// Test points of one label.
struct Target {
  std::string label;
  std::vector<Point> locations;
};

// ---------------------------------------------------------------- Cholesky

struct Cholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  Eigen::MatrixXd matrixL() const { return llt.matrixL(); }
  double log_det() const { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }
  template <typename M>
  auto solve(const M& b) const {
    return llt.solve(b);
  }
};

/// Factorizes K, retrying with jitter 1e-8·mean(diag) escalated ×10 up to 1e-2·mean(diag).
inline Cholesky chol(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) throw InvalidArgument("chol: matrix is not square");
  Cholesky out;
  if (K.size() == 0) {
    out.llt.compute(K);
    return out;
  }
  if (!K.allFinite()) throw FactorizationFailure(0.0);
  out.llt.compute(K);
  if (out.llt.info() == Eigen::Success) return out;
  double scale = K.diagonal().mean();
  if (!(scale > 0.0)) scale = K.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;
  double jitter = 0.0;
  for (double rel = 1e-8; rel <= 1e-2 * (1 + 1e-9); rel *= 10.0) {
    jitter = rel * scale;
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw FactorizationFailure(jitter);
}

/// ½ yᵀK⁻¹y + ½ log|K| + (N/2) log 2π through a factor of K.
inline double nlml(const Cholesky& c, const Eigen::VectorXd& y) {
  const Eigen::VectorXd v = c.llt.matrixL().solve(y);
  return 0.5 * v.squaredNorm() + 0.5 * c.log_det() +
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

inline double nlml(const Eigen::MatrixXd& K, const Eigen::VectorXd& y) {
  if (K.rows() != y.size()) throw InvalidArgument("nlml: size mismatch");
  return nlml(chol(K), y);
}

// ---------------------------------------------------------------- assembly

/// Data-side operator evaluations for a fixed training set, with per-prior
/// covariance contributions cached by hyperparameter value.
class Assembler {
 public:
  Assembler(const BlockKernel& bk, const TrainingSet& data) {
    data.validate(bk);
    std::size_t off = 0;
    for (const auto& b : data.blocks) {
      prepared_.push_back(bk.prepare(bk.label_index(b.label), b.locations));
      offsets_.push_back(off);
      off += b.locations.size();
    }
    n_ = off;
    cache_.resize(bk.priors().size());
  }

  std::size_t size() const { return n_; }
  const std::vector<PreparedLabel>& prepared() const { return prepared_; }

  /// Contribution of prior p alone (no noise).
  Eigen::MatrixXd prior_block(const BlockKernel& bk, std::size_t p) const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t a = 0; a < prepared_.size(); ++a) {
      for (std::size_t b = a; b < prepared_.size(); ++b) {
        if (!touches(prepared_[a], p) || !touches(prepared_[b], p)) continue;
        const Eigen::MatrixXd blk = bk.cross(prepared_[a], prepared_[b], p);
        K.block(offsets_[a], offsets_[b], blk.rows(), blk.cols()) = blk;
        if (b != a) K.block(offsets_[b], offsets_[a], blk.cols(), blk.rows()) = blk.transpose();
      }
    }
    return K;
  }

  /// Diagonal noise variances.
  Eigen::VectorXd noise_diagonal(const BlockKernel& bk) const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
    for (std::size_t a = 0; a < prepared_.size(); ++a) {
      d.segment(offsets_[a], prepared_[a].count).setConstant(bk.noise_variance(prepared_[a].label));
    }
    return d;
  }

  /// Full covariance matrix. Reuses cached prior contributions whose
  /// hyperparameters are unchanged.
  Eigen::MatrixXd matrix(const BlockKernel& bk) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t p = 0; p < bk.priors().size(); ++p) K += contribution(bk, p);
    K.diagonal() += noise_diagonal(bk);
    return K;
  }

  const Eigen::MatrixXd& contribution(const BlockKernel& bk, std::size_t p) {
    auto& slot = cache_.at(p);
    const auto& theta = bk.priors()[p].spec.log_theta;
    if (!slot.valid || slot.theta != theta) {
      slot.K = prior_block(bk, p);
      slot.theta = theta;
      slot.valid = true;
    }
    return slot.K;
  }

  /// Cross-covariance between the training set (rows) and prepared targets (columns).
  Eigen::MatrixXd cross(const BlockKernel& bk, std::span<const PreparedLabel> targets) const {
    std::size_t m = 0;
    for (const auto& t : targets) m += t.count;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_, m);
    std::size_t col = 0;
    for (const auto& t : targets) {
      for (std::size_t a = 0; a < prepared_.size(); ++a) {
        q.block(offsets_[a], col, prepared_[a].count, t.count) = bk.cross(prepared_[a], t);
      }
      col += t.count;
    }
    return q;
  }

 private:
  static bool touches(const PreparedLabel& l, std::size_t p) {
    for (const auto& part : l.parts)
      if (part.prior == p) return true;
    return false;
  }

  struct Slot {
    bool valid = false;
    std::vector<double> theta;
    Eigen::MatrixXd K;
  };

  std::vector<PreparedLabel> prepared_;
  std::vector<std::size_t> offsets_;
  std::size_t n_ = 0;
  std::vector<Slot> cache_;
};

inline Eigen::MatrixXd assemble(const BlockKernel& bk, const TrainingSet& data) {
  Assembler a(bk, data);
  return a.matrix(bk);
}

inline double nlml(const BlockKernel& bk, const TrainingSet& data, const Eigen::VectorXd& theta) {
  const BlockKernel b = bk.with_params(theta);
  return nlml(assemble(b, data), data.targets());
}

// ---------------------------------------------------------------- training

struct TrainOptions {
  int max_iter = 200;
  double f_tol = 1e-9;
  double fd_step = 1e-6;
  int n_starts = 1;         // additional starts are seeded perturbations of init
  double perturbation = 1.0;
  std::uint64_t seed = 0;
  double lower = -30.0;     // box on every log-parameter
  double upper = 15.0;
  double noise_floor = 0.0;  // lower bound on trainable noise variances (0: use `lower`)
};

struct TrainResult {
  Eigen::VectorXd theta;
  double nlml = 0.0;
  double init_nlml = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// NLML over the trainable parameter vector, with its gradient from the
/// trace identity ½ tr((K⁻¹ − ααᵀ) ∂K). ∂K is a central difference of the
/// covariance matrix in log-space.
class NlmlObjective {
 public:
  NlmlObjective(const BlockKernel& bk, const TrainingSet& data, double fd_step)
      : bk_(bk), asm_(bk, data), y_(data.targets()), h_(fd_step) {}

  double value(const Eigen::VectorXd& theta) {
    try {
      bk_.set_params(theta);
      return nlml(chol(asm_.matrix(bk_)), y_);
    } catch (const FactorizationFailure&) {
      return std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) {
    const auto n = theta.size();
    Eigen::VectorXd g = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    try {
      bk_.set_params(theta);
      const Cholesky c = chol(asm_.matrix(bk_));
      const Eigen::VectorXd alpha = c.solve(y_);
      Eigen::MatrixXd W = c.solve(Eigen::MatrixXd::Identity(y_.size(), y_.size()));
      W -= alpha * alpha.transpose();
      std::size_t k = 0;
      for (std::size_t p = 0; p < bk_.priors().size(); ++p) {
        const auto np = bk_.priors()[p].spec.num_params();
        for (std::size_t j = 0; j < np; ++j, ++k) {
          BlockKernel plus = bk_, minus = bk_;
          auto tp = theta, tm = theta;
          tp[k] += h_;
          tm[k] -= h_;
          plus.set_params(tp);
          minus.set_params(tm);
          const Eigen::MatrixXd dK = (asm_.prior_block(plus, p) - asm_.prior_block(minus, p)) / (2 * h_);
          g[k] = 0.5 * (W.cwiseProduct(dK)).sum();
        }
      }
      // Trainable noise: ∂K/∂log σ² = σ² on that group's diagonal.
      std::size_t gi = 0;
      for (const auto& s : bk_.noise()) {
        if (!s.trainable) {
          ++gi;
          continue;
        }
        double acc = 0.0;
        std::size_t row = 0;
        for (const auto& pl : asm_.prepared()) {
          const auto& lab = bk_.label(pl.label);
          if (lab.noise && *lab.noise == gi) acc += W.diagonal().segment(row, pl.count).sum();
          row += pl.count;
        }
        g[k++] = 0.5 * std::exp(s.log_var) * acc;
        ++gi;
      }
    } catch (const FactorizationFailure&) {
    } catch (const DomainError&) {
    }
    return g;
  }

 private:
  BlockKernel bk_;
  Assembler asm_;
  Eigen::VectorXd y_;
  double h_;
};

/// Minimizes the NLML from `init` (and optional perturbed restarts).
/// Guarantees nlml(result) ≤ nlml(init) whenever init is feasible.
inline TrainResult train(const BlockKernel& bk, const TrainingSet& data, const Eigen::VectorXd& init,
                         const TrainOptions& opt = {}) {
  if (static_cast<std::size_t>(init.size()) != bk.num_params()) {
    throw InvalidArgument("train: init has wrong length");
  }
  if (!init.allFinite()) throw InvalidArgument("train: init is not finite");
  NlmlObjective obj(bk, data, opt.fd_step);
  BfgsOptions bo;
  bo.max_iter = opt.max_iter;
  bo.f_tol = opt.f_tol;
  bo.lower = Eigen::VectorXd::Constant(init.size(), opt.lower);
  bo.upper = Eigen::VectorXd::Constant(init.size(), opt.upper);
  if (opt.noise_floor > 0.0) {
    for (Eigen::Index k = 0; k < init.size(); ++k)
      if (!bk.prior_of_param(static_cast<std::size_t>(k))) bo.lower[k] = std::max(opt.lower, std::log(opt.noise_floor));
  }
  auto f = [&](const Eigen::VectorXd& x) { return obj.value(x); };
  auto g = [&](const Eigen::VectorXd& x, double) { return obj.gradient(x); };

  TrainResult best;
  best.theta = init;
  best.init_nlml = obj.value(init);
  best.nlml = best.init_nlml;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, opt.perturbation);
  for (int s = 0; s < std::max(1, opt.n_starts); ++s) {
    Eigen::VectorXd x0 = init;
    if (s > 0) {
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] += normal(rng);
      x0 = x0.cwiseMax(bo.lower).cwiseMin(bo.upper);
    }
    const BfgsResult r = minimize_bfgs(f, g, x0, bo);
    best.iterations += r.iterations;
    best.evaluations += r.evaluations;
    if (std::isfinite(r.f) && r.f < best.nlml) {
      best.nlml = r.f;
      best.theta = r.x;
    }
  }
  if (!std::isfinite(best.nlml)) throw TrainingFailure("no hyperparameter iterate admitted a Cholesky factor");
  return best;
}

// ---------------------------------------------------------------- posterior

/// A GP conditioned on fixed targets y; evaluates posterior means and covariances.
class ConditionedGP {
 public:
  ConditionedGP(BlockKernel bk, const TrainingSet& data, const Eigen::VectorXd& y)
      : bk_(std::move(bk)), asm_(bk_, data) {
    if (static_cast<std::size_t>(y.size()) != asm_.size()) throw InvalidArgument("target length mismatch");
    chol_ = chol(asm_.matrix(bk_));
    alpha_ = chol_.solve(y);
  }

  const BlockKernel& kernel() const { return bk_; }
  const Cholesky& factor() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

  std::vector<PreparedLabel> prepare(std::span<const Target> targets) const {
    std::vector<PreparedLabel> out;
    for (const auto& t : targets) out.push_back(bk_.prepare(bk_.label_index(t.label), t.locations));
    return out;
  }

  Eigen::MatrixXd cross(std::span<const PreparedLabel> targets) const { return asm_.cross(bk_, targets); }

  /// Prior covariance among targets.
  Eigen::MatrixXd prior_cov(std::span<const PreparedLabel> targets) const {
    std::size_t m = 0;
    for (const auto& t : targets) m += t.count;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
    std::size_t r = 0;
    for (std::size_t a = 0; a < targets.size(); ++a) {
      std::size_t c = r;
      for (std::size_t b = a; b < targets.size(); ++b) {
        const Eigen::MatrixXd blk = bk_.cross(targets[a], targets[b]);
        k.block(r, c, blk.rows(), blk.cols()) = blk;
        if (b != a) k.block(c, r, blk.cols(), blk.rows()) = blk.transpose();
        c += targets[b].count;
      }
      r += targets[a].count;
    }
    return k;
  }

  Eigen::VectorXd mean(const std::string& label, std::span<const Point> pts) const {
    const PreparedLabel t[1] = {bk_.prepare(bk_.label_index(label), pts)};
    return asm_.cross(bk_, t).transpose() * alpha_;
  }

  double mean_at(const std::string& label, const Point& x) const {
    const Point p[1] = {x};
    return mean(label, p)[0];
  }

 private:
  BlockKernel bk_;
  Assembler asm_;
  Cholesky chol_;
  Eigen::VectorXd alpha_;
};

struct PosteriorResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

/// Removes the negative-eigenvalue part of a symmetric matrix.
inline Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return A;
  Eigen::MatrixXd out = A;
  for (Eigen::Index i = 0; i < ev.size() && ev[i] < 0.0; ++i) {
    out -= ev[i] * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  }
  return symmetrized(out);
}

inline PosteriorResult posterior(const BlockKernel& bk, const TrainingSet& data, const Eigen::VectorXd& theta,
                                 std::span<const Target> targets) {
  const ConditionedGP gp(bk.with_params(theta), data, data.targets());
  const auto prep = gp.prepare(targets);
  const Eigen::MatrixXd q = gp.cross(prep);
  const Eigen::MatrixXd V = gp.factor().llt.matrixL().solve(q);
  PosteriorResult out;
  out.mean = q.transpose() * gp.alpha();
  out.cov = symmetrized(gp.prior_cov(prep) - V.transpose() * V);
  return out;
}

// ---------------------------------------------------------------- state

/// A named contiguous range of a GaussianState, predicted by `label`.
struct FieldSlice {
  std::string name;
  std::string label;
  std::size_t offset = 0;
  std::size_t count = 0;
};

struct GaussianState {
  std::vector<Point> locations;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int step_index = 0;
  double time = 0.0;
  std::vector<FieldSlice> fields;
  std::shared_ptr<const ConditionedGP> predictor;  // posterior mean at arbitrary points

  const FieldSlice& field(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return f;
    throw InvalidArgument("state has no field '" + name + "'");
  }

  std::vector<Point> field_locations(const std::string& name) const {
    const auto& f = field(name);
    return {locations.begin() + f.offset, locations.begin() + f.offset + f.count};
  }

  Eigen::VectorXd field_mean(const std::string& name) const {
    const auto& f = field(name);
    return mean.segment(f.offset, f.count);
  }

  Eigen::MatrixXd field_cov(const std::string& name) const {
    const auto& f = field(name);
    return cov.block(f.offset, f.offset, f.count, f.count);
  }

  /// Posterior mean of a field at arbitrary points.
  Eigen::VectorXd predict(const std::string& name, std::span<const Point> pts) const {
    if (!predictor) throw InvalidArgument("state has no predictor");
    return predictor->mean(field(name).label, pts);
  }

  ScalarField mean_fn(const std::string& name) const {
    if (!predictor) throw InvalidArgument("state has no predictor");
    return [gp = predictor, label = field(name).label](const Point& x) { return gp->mean_at(label, x); };
  }

  /// Throws StateMismatch unless dimensions agree and cov is symmetric PSD
  /// within round-off.
  void validate() const {
    const auto n = static_cast<Eigen::Index>(locations.size());
    if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
      throw StateMismatch("state dimensions disagree");
    }
    if (n == 0) return;
    if (!cov.allFinite() || !mean.allFinite()) throw StateMismatch("state has non-finite entries");
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300)) {
      throw StateMismatch("state covariance is not symmetric");
    }
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues()[0];
    const double tol = std::max(1e-8 * std::abs(cov.trace()), 1e-14 * scale * static_cast<double>(n));
    if (lmin < -tol) throw StateMismatch("state covariance has eigenvalue " + std::to_string(lmin));
  }
};

struct PropagationResult {
  GaussianState state;
  Eigen::MatrixXd posterior_cov;  // k** − qᵀK⁻¹q
  Eigen::MatrixXd correction;     // qᵀK⁻¹ S Σ Sᵀ K⁻¹q
};

/// Posterior at `targets` with the Gaussian artificial data of `prev`
/// marginalized out. Artificial blocks are those with a state_offset; their
/// values are replaced by prev.mean.
inline PropagationResult propagate_detailed(const BlockKernel& bk, const TrainingSet& data,
                                            const Eigen::VectorXd& theta, std::span<const Target> targets,
                                            const GaussianState& prev) {
  const auto n_state = static_cast<std::size_t>(prev.mean.size());
  if (prev.cov.rows() != prev.mean.size() || prev.cov.cols() != prev.mean.size() ||
      prev.locations.size() != n_state) {
    throw StateMismatch("previous state dimensions disagree");
  }
  Eigen::VectorXd y = data.targets();
  std::vector<std::pair<std::size_t, std::size_t>> rows;  // (data row, state index)
  std::size_t row = 0;
  for (const auto& b : data.blocks) {
    if (b.state_offset) {
      const std::size_t off = *b.state_offset;
      if (off + b.locations.size() > n_state) {
        throw StateMismatch("block '" + b.label + "' exceeds the previous state");
      }
      for (std::size_t i = 0; i < b.locations.size(); ++i) {
        if (b.locations[i] != prev.locations[off + i]) {
          throw StateMismatch("block '" + b.label + "' locations differ from the previous state");
        }
        y[static_cast<Eigen::Index>(row + i)] = prev.mean[static_cast<Eigen::Index>(off + i)];
        rows.emplace_back(row + i, off + i);
      }
    }
    row += b.locations.size();
  }

  auto gp = std::make_shared<ConditionedGP>(bk.with_params(theta), data, y);
  const auto prep = gp->prepare(targets);
  const Eigen::MatrixXd q = gp->cross(prep);
  const Eigen::MatrixXd V = gp->factor().llt.matrixL().solve(q);

  PropagationResult out;
  out.posterior_cov = symmetrized(gp->prior_cov(prep) - V.transpose() * V);

  // W = Sᵀ K⁻¹ q, S mapping state entries onto artificial data rows.
  const Eigen::MatrixXd Kq = gp->factor().llt.matrixU().solve(V);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_state), q.cols());
  for (const auto& [r, s] : rows) W.row(static_cast<Eigen::Index>(s)) += Kq.row(static_cast<Eigen::Index>(r));
  out.correction = symmetrized(W.transpose() * prev.cov * W);

  GaussianState& st = out.state;
  st.mean = q.transpose() * gp->alpha();
  st.cov = floor_eigenvalues(symmetrized(out.posterior_cov + out.correction));
  std::size_t off = 0;
  for (const auto& t : targets) {
    st.fields.push_back({t.label, t.label, off, t.locations.size()});
    st.locations.insert(st.locations.end(), t.locations.begin(), t.locations.end());
    off += t.locations.size();
  }
  st.step_index = prev.step_index + 1;
  st.predictor = std::move(gp);
  return out;
}

inline GaussianState propagate(const BlockKernel& bk, const TrainingSet& data, const Eigen::VectorXd& theta,
                               std::span<const Target> targets, const GaussianState& prev) {
  return propagate_detailed(bk, data, theta, targets, prev).state;
}

}  // namespace ngp
