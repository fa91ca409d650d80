#pragma once

// Time stepping: bootstrap from initial data, then per step train, predict at
// fresh artificial locations and propagate the previous covariance.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ngp/gp.hpp"
#include "ngp/problems.hpp"
#include "ngp/schemes.hpp"

namespace ngp {

struct RunConfig {
  double dt = 0.01;
  int n_steps = 1;
  std::vector<int> n_initial;     // per field; empty = problem default
  std::vector<int> n_artificial;  // per field; empty = problem default
  double noise0 = 0.0;
  std::uint64_t seed = 0;
  bool warm_start = true;
  int error_grid_size = 256;  // 1-D grid points
  int error_grid_side = 32;   // 2-D grid is side x side
  bool track_errors = true;   // false: error only at the final step
  bool sample_artificial = false;  // diagnostics: train on a draw from N(mean, cov)
  bool fixed_locations = false;    // diagnostics: reuse the first step's locations
  bool oracle_mode = false;        // exact artificial values and zero previous covariance
  int train_starts = 1;
  int bootstrap_starts = 3;
  std::optional<bool> train_noise;  // default: trainable iff noise0 > 0
  double noise_floor = 1e-8;        // lower bound on trained noise variances

  void validate(const ProblemSpec& p) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    if (n_steps < 1) throw InvalidArgument("n_steps must be at least 1");
    if (dt * n_steps > p.T * (1.0 + 1e-9)) throw InvalidArgument("dt * n_steps exceeds the horizon T");
    if (!(noise0 >= 0.0)) throw InvalidArgument("noise level must be non-negative");
    if (!n_initial.empty() && n_initial.size() != p.fields.size()) throw InvalidArgument("n_initial per field");
    if (!n_artificial.empty() && n_artificial.size() != p.fields.size()) throw InvalidArgument("n_artificial per field");
    for (int n : n_artificial)
      if (n < 1) throw InvalidArgument("artificial counts must be positive");
    if (error_grid_size < 1 || error_grid_side < 1) throw InvalidArgument("error grid must be nonempty");
  }

  std::vector<int> initial_counts(const ProblemSpec& p) const {
    return n_initial.empty() ? std::vector<int>(p.fields.size(), p.default_initial) : n_initial;
  }
  std::vector<int> artificial_counts(const ProblemSpec& p) const {
    if (!n_artificial.empty()) return n_artificial;
    if (noise0 == 0.0 && !p.default_artificial_noiseless.empty()) return p.default_artificial_noiseless;
    return p.default_artificial;
  }
};

struct StepResult {
  int step = 0;
  double time = 0.0;
  GaussianState state;
  Eigen::VectorXd theta;
  double nlml = 0.0;
  std::optional<double> rel_l2_error;
  double trace_cov = 0.0;
  double wall_ms = 0.0;
};

struct RunResult {
  GaussianState initial;
  Eigen::VectorXd initial_theta;
  std::vector<StepResult> steps;
  std::optional<std::string> failure;  // set when a step aborted the run
  int failed_step = 0;

  bool ok() const { return !failure.has_value(); }
};

// ---------------------------------------------------------------- errors

/// Midpoint grid on the domain: n points in 1-D, side x side in 2-D.
inline std::vector<Point> error_grid(const Domain& d, int n, int side) {
  std::vector<Point> g;
  if (d.dim == 1) {
    for (int i = 0; i < n; ++i) g.push_back({d.lo[0] + (d.hi[0] - d.lo[0]) * (i + 0.5) / n, 0.0});
  } else {
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        g.push_back({d.lo[0] + (d.hi[0] - d.lo[0]) * (i + 0.5) / side,
                     d.lo[1] + (d.hi[1] - d.lo[1]) * (j + 0.5) / side});
      }
  }
  return g;
}

/// ||mean - truth||_2 / ||truth||_2 over the grid.
inline double relative_l2_error(const ScalarField& mean, const ScalarField& truth, std::span<const Point> grid) {
  if (grid.empty()) throw InvalidArgument("relative_l2_error: empty grid");
  double num = 0.0, den = 0.0;
  for (const auto& x : grid) {
    const double t = truth(x);
    const double e = mean(x) - t;
    num += e * e;
    den += t * t;
  }
  if (!(den > 0.0)) throw UndefinedNorm("reference solution vanishes on the error grid");
  return std::sqrt(num / den);
}

inline double relative_l2_error(std::span<const double> mean, std::span<const double> truth) {
  if (mean.size() != truth.size() || mean.empty()) throw InvalidArgument("relative_l2_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    num += (mean[i] - truth[i]) * (mean[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw UndefinedNorm("reference solution vanishes on the error grid");
  return std::sqrt(num / den);
}

inline double state_error(const ProblemSpec& p, const GaussianState& s, const RunConfig& cfg,
                          const std::string& field = "u") {
  const auto grid = error_grid(p.domain, cfg.error_grid_size, cfg.error_grid_side);
  const Eigen::VectorXd m = s.predict(field, grid);
  std::vector<double> truth(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) truth[i] = reference_solution(p, s.time, grid[i], field);
  return relative_l2_error(std::span<const double>(m.data(), grid.size()), truth);
}

// ---------------------------------------------------------------- kernels per problem

/// Base kernel of each problem, used for bootstrap and for every scheme prior.
inline KernelSpec default_kernel(const ProblemSpec& p) {
  switch (p.kernel) {
    case KernelFamily::NN1D: return KernelSpec::nn1d(1.0, 10.0);
    case KernelFamily::SE2D_ANISO: return KernelSpec::se2d(1.0, 10.0, 10.0);
    case KernelFamily::SE1D: break;
  }
  return KernelSpec::se1d(1.0, 10.0);
}

/// Starting points of the bootstrap fit: the length-scale-like parameter over {1, 10, 100}.
inline std::vector<KernelSpec> bootstrap_starts(const ProblemSpec& p, int n) {
  std::vector<KernelSpec> out;
  const double ws[] = {10.0, 1.0, 100.0};
  for (int i = 0; i < std::clamp(n, 1, 3); ++i) {
    KernelSpec k = default_kernel(p);
    for (std::size_t j = 1; j < k.log_theta.size(); ++j) k.log_theta[j] = std::log(ws[i]);
    out.push_back(k);
  }
  return out;
}

namespace detail {

constexpr double kFixedNoise = 1e-8;
constexpr double kNoiseInit = 1e-4;

inline std::mt19937_64 stream_rng(std::uint64_t seed, int step, std::uint32_t stream) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(step), stream};
  return std::mt19937_64(sq);
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------- bootstrap

/// Fits an independent single-output GP per initial field and returns the
/// state at the initial locations together with the trained parameters.
inline std::pair<GaussianState, Eigen::VectorXd> bootstrap_detailed(const ProblemSpec& p, const InitialData& init,
                                                                    const RunConfig& cfg = {}) {
  if (init.fields.empty()) throw InvalidArgument("bootstrap: no initial data");
  const bool noisy = init.sigma0 > 0.0;
  const auto starts = bootstrap_starts(p, cfg.bootstrap_starts);

  BlockKernel bk;
  TrainingSet data;
  std::vector<Target> targets;
  for (const auto& f : init.fields) {
    if (f.locations.empty()) throw InvalidArgument("bootstrap: field '" + f.name + "' has no data");
    const auto g = bk.add_prior(f.name + "0", starts[0]);
    const auto nz = bk.add_noise(f.name + "_noise", noisy ? 1e-2 : detail::kFixedNoise, noisy);
    bk.add_label({f.name, {{g, DiffOp::identity()}}, {}, nz});
    data.blocks.push_back({f.name, f.locations, f.values, {}});
    targets.push_back({f.name, f.locations});
  }

  TrainOptions topt;
  topt.seed = init.seed;
  std::optional<TrainResult> best;
  for (const auto& s : starts) {
    BlockKernel b = bk;
    for (std::size_t i = 0; i < b.priors().size(); ++i) {
      Eigen::VectorXd th = b.params();
      std::size_t k = 0;
      for (std::size_t j = 0; j < i; ++j) k += b.priors()[j].spec.num_params();
      for (std::size_t j = 0; j < s.log_theta.size(); ++j) th[static_cast<Eigen::Index>(k + j)] = s.log_theta[j];
      b.set_params(th);
    }
    try {
      auto r = train(b, data, b.params(), topt);
      if (!best || r.nlml < best->nlml) best = std::move(r);
    } catch (const TrainingFailure&) {
    }
  }
  if (!best) throw TrainingFailure("bootstrap: no start produced a finite likelihood");

  auto gp = std::make_shared<ConditionedGP>(bk.with_params(best->theta), data, data.targets());
  const auto prep = gp->prepare(targets);
  const Eigen::MatrixXd q = gp->cross(prep);
  const Eigen::MatrixXd V = gp->factor().llt.matrixL().solve(q);

  GaussianState st;
  st.mean = q.transpose() * gp->alpha();
  st.cov = floor_eigenvalues(symmetrized(gp->prior_cov(prep) - V.transpose() * V));
  std::size_t off = 0;
  for (const auto& t : targets) {
    st.fields.push_back({t.label, t.label, off, t.locations.size()});
    st.locations.insert(st.locations.end(), t.locations.begin(), t.locations.end());
    off += t.locations.size();
  }
  st.step_index = 0;
  st.time = 0.0;
  st.predictor = std::move(gp);
  return {std::move(st), best->theta};
}

inline GaussianState bootstrap(const ProblemSpec& p, const InitialData& init, const RunConfig& cfg = {}) {
  return bootstrap_detailed(p, init, cfg).first;
}

// ---------------------------------------------------------------- step model

/// Everything one step trains on and predicts: the scheme kernel with
/// boundary and noise labels, the training blocks and the prediction targets.
struct StepModel {
  BlockKernel bk;
  TrainingSet data;
  std::vector<Target> targets;
  std::vector<std::string> target_fields;
};

/// Scheme labels carrying artificial data, each paired with the state field
/// it reads from.
inline std::vector<std::pair<std::string, std::string>> artificial_labels(const ProblemSpec& p, const BlockKernel& bk) {
  if (std::holds_alternative<LmmScheme>(p.scheme)) {
    if (p.name == ProblemName::wave) return {{"u^{n-1}", "u"}, {"v^{n-1}", "v"}};
    return {{"u^{n-1}", "u"}};
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& l : bk.labels()) {
    const std::string& s = l.name;
    if (s.size() > 4 && s.rfind("u^n_", 0) == 0 &&
        std::all_of(s.begin() + 4, s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      out.push_back({s, "u"});
    }
  }
  return out;
}

/// Number of scheme priors of a problem.
inline std::size_t scheme_prior_count(const ProblemSpec& p) {
  if (const auto* t = std::get_if<ButcherTableau>(&p.scheme)) return rk_prior_labels(*t).size();
  return p.name == ProblemName::wave ? 2 : 1;
}

/// Scheme kernel plus noise groups and boundary labels; `data` holds the
/// boundary rows only.
inline StepModel build_step_model(const ProblemSpec& p, const RunConfig& cfg, const ScalarField& mu_prev) {
  const bool noisy = cfg.train_noise.value_or(cfg.noise0 > 0.0 && !cfg.oracle_mode);
  const KernelSpec base = default_kernel(p);
  StepModel m;
  std::vector<std::string> boundary_labels;
  if (const auto* t = std::get_if<ButcherTableau>(&p.scheme)) {
    m.bk = rk_blocks(*t, p.op, std::vector<KernelSpec>(scheme_prior_count(p), base), cfg.dt);
    boundary_labels = rk_prior_labels(*t);
    m.targets = {{"u^{n+1}", {}}};
    m.target_fields = {"u"};
  } else if (p.name == ProblemName::wave) {
    m.bk = wave_trapezoidal_blocks(cfg.dt, base, base);
    boundary_labels = {"u^n"};
    m.targets = {{"u^n", {}}, {"v^n", {}}};
    m.target_fields = {"u", "v"};
  } else if (p.name == ProblemName::burgers) {
    m.bk = burgers_backward_euler_blocks(mu_prev, p.nu, cfg.dt, base);
    boundary_labels = {"u^n"};
    m.targets = {{"u^n", {}}};
    m.target_fields = {"u"};
  } else {
    m.bk = lmm_blocks(std::get<LmmScheme>(p.scheme), p.op, {base}, cfg.dt);
    boundary_labels = {"u^n"};
    m.targets = {{"u^n", {}}};
    m.target_fields = {"u"};
  }

  // boundary targets are exact; only the artificial groups learn a noise level
  const double init_var = noisy ? detail::kNoiseInit : detail::kFixedNoise;
  const auto nb = m.bk.add_noise("boundary_noise", detail::kFixedNoise, false);
  std::vector<std::pair<std::string, std::size_t>> field_noise;
  for (const auto& f : p.fields) field_noise.push_back({f, m.bk.add_noise(f + "_artificial_noise", init_var, noisy)});
  for (const auto& [label, field] : artificial_labels(p, m.bk)) {
    for (const auto& [f, g] : field_noise)
      if (f == field) m.bk.set_label_noise(label, g);
  }
  m.data.blocks = boundary_rows(p, m.bk, boundary_labels, nb);
  return m;
}

/// Fresh artificial locations for a step, one stream per field.
inline std::vector<std::vector<Point>> draw_locations(const ProblemSpec& p, const RunConfig& cfg, int step) {
  const auto counts = cfg.artificial_counts(p);
  std::vector<std::vector<Point>> out;
  for (std::size_t f = 0; f < p.fields.size(); ++f) {
    auto rng = detail::stream_rng(cfg.seed, cfg.fixed_locations ? 1 : step, static_cast<std::uint32_t>(100 + f));
    std::vector<Point> pts;
    for (int i = 0; i < counts[f]; ++i) pts.push_back(p.domain.sample(rng));
    out.push_back(std::move(pts));
  }
  return out;
}

/// Initial parameter vector of a step model: base kernel (or bootstrap)
/// parameters for every prior, noise at its construction value.
inline Eigen::VectorXd default_step_theta(const ProblemSpec& p, const BlockKernel& bk,
                                          const std::optional<Eigen::VectorXd>& bootstrap_theta = {}) {
  Eigen::VectorXd th = bk.params();
  const auto nb = default_kernel(p).num_params();
  std::size_t k = 0;
  for (std::size_t i = 0; i < bk.priors().size(); ++i) {
    for (std::size_t j = 0; j < nb; ++j, ++k) {
      if (bootstrap_theta) {
        // wave priors map to the u and v bootstrap fits, every other scheme to the single field
        const std::size_t src = (p.name == ProblemName::wave ? i : 0) * nb + j;
        th[static_cast<Eigen::Index>(k)] = (*bootstrap_theta)[static_cast<Eigen::Index>(src)];
      }
    }
  }
  return th;
}

/// Advances `prev` by one step. `theta_init` must match the step model's
/// parameter layout (see default_step_theta).
inline StepResult step(const GaussianState& prev, const ProblemSpec& p, const RunConfig& cfg,
                       const Eigen::VectorXd& theta_init) {
  const int n = prev.step_index + 1;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    GaussianState src = prev;
    if (cfg.oracle_mode) {
      for (const auto& f : src.fields)
        for (std::size_t i = 0; i < f.count; ++i) {
          src.mean[static_cast<Eigen::Index>(f.offset + i)] =
              reference_solution(p, prev.time, src.locations[f.offset + i], f.name);
        }
      src.cov.setZero();
    } else if (cfg.sample_artificial) {
      auto rng = detail::stream_rng(cfg.seed, n, 7u);
      std::normal_distribution<double> z(0.0, 1.0);
      Eigen::VectorXd e(src.mean.size());
      for (auto& v : e) v = z(rng);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(src.cov);
      src.mean += es.eigenvectors() * (es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseProduct(e));
    }

    ScalarField mu;
    if (p.name == ProblemName::burgers) {
      if (cfg.oracle_mode) {
        mu = [&p, t = prev.time](const Point& x) { return reference_solution(p, t, x); };
      } else {
        mu = prev.mean_fn("u");
      }
    }
    StepModel m = build_step_model(p, cfg, mu);
    for (const auto& [label, field] : artificial_labels(p, m.bk)) {
      const auto& f = src.field(field);
      m.data.blocks.push_back({label, src.field_locations(field), src.field_mean(field), f.offset});
    }
    const auto locs = draw_locations(p, cfg, n);
    for (std::size_t i = 0; i < m.targets.size(); ++i) {
      const auto fi = std::find(p.fields.begin(), p.fields.end(), m.target_fields[i]) - p.fields.begin();
      m.targets[i].locations = locs[static_cast<std::size_t>(fi)];
    }

    TrainOptions topt;
    topt.n_starts = cfg.train_starts;
    topt.seed = cfg.seed + static_cast<std::uint64_t>(n);
    topt.noise_floor = cfg.noise_floor;
    const auto tr = train(m.bk, m.data, theta_init, topt);

    PropagationResult pr = propagate_detailed(m.bk, m.data, tr.theta, m.targets, src);
    StepResult out;
    out.state = std::move(pr.state);
    for (std::size_t i = 0; i < out.state.fields.size(); ++i) out.state.fields[i].name = m.target_fields[i];
    out.state.time = n * cfg.dt;
    out.state.step_index = n;
    out.state.validate();
    out.step = n;
    out.time = out.state.time;
    out.theta = tr.theta;
    out.nlml = tr.nlml;
    out.trace_cov = out.state.cov.trace();
    out.wall_ms = detail::elapsed_ms(t0);
    return out;
  } catch (const StepFailure&) {
    throw;
  } catch (const Error& e) {
    throw StepFailure(n, e.what());
  }
}

/// Full run from seeded initial data. A failing step stops the run; the
/// steps completed before it are kept.
inline RunResult run(const ProblemSpec& p, const RunConfig& cfg) {
  cfg.validate(p);
  RunResult res;
  const auto init = initial_data(p, cfg.initial_counts(p), cfg.noise0, cfg.seed);
  auto [s0, th0] = bootstrap_detailed(p, init, cfg);
  res.initial = s0;
  res.initial_theta = th0;

  const GaussianState* prev = &res.initial;
  std::optional<Eigen::VectorXd> theta;
  for (int k = 1; k <= cfg.n_steps; ++k) {
    try {
      Eigen::VectorXd init_theta;
      if (cfg.warm_start && theta) {
        init_theta = *theta;
      } else {
        const auto m = build_step_model(p, cfg, p.name == ProblemName::burgers ? prev->mean_fn("u") : ScalarField{});
        init_theta = default_step_theta(p, m.bk, th0);
      }
      StepResult r = step(*prev, p, cfg, init_theta);
      if (cfg.track_errors || k == cfg.n_steps) r.rel_l2_error = state_error(p, r.state, cfg);
      theta = r.theta;
      res.steps.push_back(std::move(r));
      prev = &res.steps.back().state;
    } catch (const StepFailure& e) {
      res.failure = e.what();
      res.failed_step = e.step();
      break;
    } catch (const Error& e) {
      res.failure = StepFailure(k, e.what()).what();
      res.failed_step = k;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------- convergence

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;  // leading points entering the fit
};

/// Least-squares slope of log(error) against log(h). Points are ordered from
/// coarse to fine; trailing points whose error falls by less than 25% per
/// halving of h are dropped first, keeping at least two.
inline SlopeFit fit_slope(std::vector<double> h, std::vector<double> err) {
  if (h.size() != err.size()) throw InvalidArgument("fit_slope: size mismatch");
  std::vector<std::size_t> idx(h.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return h[a] > h[b]; });
  std::vector<double> lx, ly;
  for (auto i : idx) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw InvalidArgument("fit_slope: values must be positive");
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(err[i]));
  }
  if (lx.size() < 2) throw InvalidArgument("fit_slope: need at least two points");
  std::size_t used = lx.size();
  while (used > 2) {
    const double halvings = (lx[used - 2] - lx[used - 1]) / std::log(2.0);
    const double per_halving = std::exp((ly[used - 2] - ly[used - 1]) / halvings);
    if (per_halving >= 1.0 / 0.75) break;
    --used;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < used; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(used);
  my /= static_cast<double>(used);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < used; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_slope: step sizes must differ");
  return {sxy / sxx, used};
}

enum class SweepKind { dt, n };

struct SweepPoint {
  double value = 0.0;           // requested dt or point count
  double effective_dt = 0.0;    // T / n_steps
  int n_steps = 0;
  std::optional<double> rel_l2_error;
  std::optional<double> trace_cov;
  std::string failure;
};

struct ConvergenceReport {
  SweepKind kind = SweepKind::dt;
  std::vector<SweepPoint> points;
  std::optional<SlopeFit> fit;
};

/// Runs one configuration per sweep value, each to the horizon T. For a dt
/// sweep the step is shrunk to T / ceil(T / dt) so every run ends exactly at
/// T; the slope is fitted against that effective step. For a point-count
/// sweep the slope is fitted against 1/N.
inline ConvergenceReport convergence_sweep(const ProblemSpec& p, const RunConfig& base, SweepKind kind,
                                           const std::vector<double>& values, int jobs = 1) {
  if (values.size() < 3) throw InvalidArgument("convergence_sweep needs at least three values");
  ConvergenceReport rep;
  rep.kind = kind;
  rep.points.resize(values.size());
  std::vector<RunConfig> cfgs(values.size(), base);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& pt = rep.points[i];
    auto& c = cfgs[i];
    pt.value = values[i];
    if (kind == SweepKind::dt) {
      if (!(values[i] > 0.0)) throw InvalidArgument("sweep step sizes must be positive");
      c.dt = values[i];
    } else {
      if (!(values[i] >= 2.0) || values[i] != std::floor(values[i])) {
        throw InvalidArgument("sweep point counts must be integers >= 2");
      }
      const int n = static_cast<int>(values[i]);
      c.n_initial.assign(p.fields.size(), n);
      c.n_artificial.assign(p.fields.size(), n);
    }
    c.n_steps = static_cast<int>(std::ceil(p.T / c.dt - 1e-9));
    c.dt = p.T / c.n_steps;
    c.track_errors = false;
    pt.effective_dt = c.dt;
    pt.n_steps = c.n_steps;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      auto& pt = rep.points[i];
      try {
        const auto r = run(p, cfgs[i]);
        if (!r.ok()) {
          pt.failure = *r.failure;
        } else {
          pt.rel_l2_error = r.steps.back().rel_l2_error;
          pt.trace_cov = r.steps.back().trace_cov;
        }
      } catch (const std::exception& e) {
        pt.failure = e.what();
      }
    }
  };
  const int nt = std::clamp(jobs, 1, static_cast<int>(values.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<double> h, e;
  for (const auto& pt : rep.points) {
    if (!pt.rel_l2_error || !(*pt.rel_l2_error > 0.0)) continue;
    h.push_back(kind == SweepKind::dt ? pt.effective_dt : 1.0 / pt.value);
    e.push_back(*pt.rel_l2_error);
  }
  if (h.size() >= 3) rep.fit = fit_slope(h, e);
  return rep;
}

}  // namespace ngp
