// Acceptance runner. Prints one PASS/FAIL line per criterion; with arguments,
// runs only the listed criterion numbers. Exit status is nonzero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ngp/ngp.hpp"

using namespace ngp;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string errors_of(const ConvergenceReport& rep) {
  std::string s = "errors [";
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto& p = rep.points[i];
    s += (i ? ", " : "") + (p.rel_l2_error ? num(*p.rel_l2_error) : std::string("failed: ") + p.failure);
  }
  return s + "]";
}

Outcome slope_in(const ProblemSpec& p, const RunConfig& cfg, const std::vector<double>& dts, double lo, double hi) {
  const auto rep = convergence_sweep(p, cfg, SweepKind::dt, dts);
  if (!rep.fit) return {false, "no slope; " + errors_of(rep)};
  const double s = rep.fit->slope;
  return {s >= lo && s <= hi, "slope " + num(s) + " over " + std::to_string(rep.fit->used) + " points, range [" +
                                  num(lo) + ", " + num(hi) + "]; " + errors_of(rep)};
}

RunConfig points(const ProblemSpec& p, int n) {
  RunConfig c;
  c.seed = kSeed;
  c.n_initial.assign(p.fields.size(), n);
  c.n_artificial.assign(p.fields.size(), n);
  return c;
}

// ---------------------------------------------------------------- criteria

Outcome burgers_order() {
  const auto p = make_problem(ProblemName::burgers, {.T = 0.1});
  return slope_in(p, points(p, 50), {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}, 0.7, 1.3);
}

Outcome wave_order() {
  const auto p = make_problem(ProblemName::wave, {.T = 0.2});
  return slope_in(p, points(p, 50), {4e-2, 2e-2, 1e-2, 5e-3}, 1.6, 2.4);
}

Outcome advection_order() {
  const auto p = make_problem(ProblemName::advection, {.T = 0.5});
  return slope_in(p, points(p, 50), {2.5e-1, 1.25e-1, 6.25e-2}, 3.0, 5.0);
}

Outcome heat_order() {
  const auto p = make_problem(ProblemName::heat, {.T = 0.2, .boundary_points_per_edge = 10});
  return slope_in(p, points(p, 50), {4e-2, 2e-2, 1e-2}, 1.5, 2.5);
}

Outcome burgers_saturation() {
  const auto p = make_problem(ProblemName::burgers, {.T = 0.1});
  const std::vector<double> ns{10, 20, 40, 80};
  std::map<double, ConvergenceReport> reps;
  for (double dt : {1e-2, 1e-3}) {
    RunConfig c;
    c.seed = kSeed;
    c.dt = dt;
    reps[dt] = convergence_sweep(p, c, SweepKind::n, ns);
  }
  // plateau: the error at the largest N
  const auto& coarse = reps[1e-2].points.back().rel_l2_error;
  const auto& fine = reps[1e-3].points.back().rel_l2_error;
  std::string d = "dt=1e-2 " + errors_of(reps[1e-2]) + "; dt=1e-3 " + errors_of(reps[1e-3]);
  if (!coarse || !fine) return {false, d};
  return {*fine < *coarse, "plateau " + num(*fine) + " < " + num(*coarse) + "; " + d};
}

Outcome kernel_oracle() {
  const auto results = validation::run_checks(
      [](const Point& x, const Point& y, const KernelSpec& s, const DerivOrder& o) { return eval_kernel(x, y, s, o); },
      100);
  bool ok = true;
  double worst = 0.0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_rel_error / r.tolerance);
    if (!r.passed()) {
      ok = false;
      failed += " " + to_string(r.family) + to_string(r.order);
    }
  }
  return {ok, std::to_string(results.size()) + " checks x 100 pairs, worst error/tolerance " + num(worst) +
                  (failed.empty() ? std::string() : "; failed:" + failed)};
}

/// Random previous state for a problem: `k` points per field, random mean
/// and, unless `zero_cov`, a random SPD covariance.
GaussianState random_state(const ProblemSpec& p, std::size_t k, bool zero_cov, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  GaussianState s;
  std::size_t off = 0;
  for (const auto& f : p.fields) {
    s.fields.push_back({f, f, off, k});
    for (std::size_t i = 0; i < k; ++i) s.locations.push_back(p.domain.sample(rng));
    off += k;
  }
  const auto n = static_cast<Eigen::Index>(off);
  s.mean = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return z(rng); });
  s.cov = zero_cov ? Eigen::MatrixXd::Zero(n, n) : Eigen::MatrixXd(0.01 * A * A.transpose());
  return s;
}

Outcome propagation_identity() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const std::vector<ProblemSpec> problems{
      make_problem(ProblemName::burgers), make_problem(ProblemName::wave), make_problem(ProblemName::advection),
      make_problem(ProblemName::heat, {.dt = 0.01, .boundary_points_per_edge = 1})};
  const ScalarField mu = [](const Point& x) { return -std::sin(std::numbers::pi * x[0]); };
  double worst_cov = 0.0, worst_mean = 0.0, min_eig = 0.0;
  std::size_t max_size = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto& p = problems[static_cast<std::size_t>(trial) % problems.size()];
    RunConfig cfg;
    cfg.dt = p.dt;
    StepModel m = build_step_model(p, cfg, mu);
    const auto art = artificial_labels(p, m.bk);
    const std::size_t room = 10 - m.data.size();
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, room / art.size())(rng);

    for (bool zero : {true, false}) {
      const GaussianState prev = random_state(p, k, zero, rng);
      TrainingSet data = m.data;
      for (const auto& [label, field] : art)
        data.blocks.push_back({label, prev.field_locations(field), prev.field_mean(field), prev.field(field).offset});
      max_size = std::max(max_size, data.size());
      auto targets = m.targets;
      for (auto& t : targets) {
        const int c = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < c; ++i) t.locations.push_back(p.domain.sample(rng));
      }
      Eigen::VectorXd theta = default_step_theta(p, m.bk);
      for (std::size_t i = 0; i < m.bk.priors().size() * default_kernel(p).num_params(); ++i)
        theta[static_cast<Eigen::Index>(i)] += u(rng);

      const auto pr = propagate_detailed(m.bk, data, theta, targets, prev);
      if (zero) {
        const auto post = posterior(m.bk, data, theta, targets);
        worst_cov = std::max(worst_cov, (pr.state.cov - post.cov).cwiseAbs().maxCoeff());
        worst_mean = std::max(worst_mean, (pr.state.mean - post.mean).cwiseAbs().maxCoeff());
      } else {
        const double scale = std::max(pr.correction.cwiseAbs().maxCoeff(), 1e-300);
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(pr.correction, Eigen::EigenvaluesOnly).eigenvalues()[0];
        min_eig = std::min(min_eig, lmin / scale);
      }
    }
  }
  const bool ok = worst_cov <= 1e-12 && min_eig >= -1e-12;
  return {ok, "20 systems of size <= " + std::to_string(max_size) + ": max |cov - posterior| " + num(worst_cov) +
                  " (tol 1e-12), max |mean - posterior| " + num(worst_mean) + ", min eig(correction)/scale " +
                  num(min_eig)};
}

Outcome nlml_brute_force() {
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return z(rng); });
    const Eigen::MatrixXd K = A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
    const double brute = 0.5 * y.dot(K.inverse() * y) + 0.5 * std::log(K.determinant()) +
                         0.5 * n * std::log(2.0 * std::numbers::pi);
    worst = std::max(worst, std::abs(nlml(K, y) - brute) / std::abs(brute));
  }
  return {worst <= 1e-9, "200 SPD systems of size 1..6, max rel. error " + num(worst) + " (tol 1e-9)"};
}

Outcome noise_trace() {
  struct Case {
    ProblemName name;
    double dt;
    int steps;
  };
  bool ok = true;
  std::string d;
  for (const auto& c : std::vector<Case>{{ProblemName::burgers, 0.01, 5},
                                         {ProblemName::wave, 0.01, 5},
                                         {ProblemName::advection, 0.1, 5},
                                         {ProblemName::heat, 0.01, 3}}) {
    const auto p = make_problem(c.name);
    double tr[2] = {0.0, 0.0};
    for (int noisy = 0; noisy < 2; ++noisy) {
      RunConfig cfg = points(p, 30);
      cfg.dt = c.dt;
      cfg.n_steps = c.steps;
      cfg.noise0 = noisy ? 0.05 : 0.0;
      cfg.track_errors = false;
      const auto r = run(p, cfg);
      if (!r.ok()) {
        ok = false;
        d += to_string(c.name) + " failed: " + *r.failure + "; ";
        tr[noisy] = std::nan("");
        continue;
      }
      tr[noisy] = r.steps.back().trace_cov;
    }
    ok = ok && tr[1] > tr[0];
    d += to_string(c.name) + " " + num(tr[0]) + " -> " + num(tr[1]) + "; ";
  }
  return {ok, "final trace, noiseless -> noisy: " + d};
}

Outcome long_advection() {
  const auto p = make_problem(ProblemName::advection, {.T = 10.0});
  RunConfig cfg = points(p, 25);
  cfg.dt = 0.1;
  cfg.n_steps = 100;
  cfg.track_errors = false;
  const auto r = run(p, cfg);
  if (!r.ok()) return {false, "failed at step " + std::to_string(r.failed_step) + ": " + *r.failure};
  const double e = *r.steps.back().rel_l2_error;
  return {e <= 0.5, "100 steps to t=" + num(r.steps.back().time) + ", final error " + num(e) + " (tol 0.5)"};
}

Outcome cli_determinism() {
  const fs::path base = fs::temp_directory_path() / "ngp_acceptance_cli";
  fs::remove_all(base);
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path dir = base / std::to_string(i);
    const std::string cmd = std::string("\"") + NGP_CLI_PATH +
                            "\" solve --problem advection --dt 0.1 --T 1 --seed 42 --out \"" + dir.string() +
                            "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI invocation failed: " + cmd};
    std::ifstream f(dir / "steps.csv", std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    files[i] = ss.str();
  }
  const bool ok = !files[0].empty() && files[0] == files[1];
  return {ok, "two advection runs of 10 steps: steps.csv " + std::string(ok ? "byte-identical" : "differs") + " (" +
                  std::to_string(files[0].size()) + " bytes)"};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
  double budget_s;  // runtime limit, 0 for none
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "Burgers first-order in time", burgers_order, 300},
      {2, "wave second-order in time", wave_order, 300},
      {3, "advection fourth-order in time", advection_order, 300},
      {4, "heat second-order in time", heat_order, 600},
      {5, "Burgers spatial saturation", burgers_saturation, 0},
      {6, "kernel derivative oracle", kernel_oracle, 30},
      {7, "propagation identity", propagation_identity, 0},
      {8, "NLML brute force", nlml_brute_force, 0},
      {9, "uncertainty grows with noise", noise_trace, 0},
      {10, "long-time advection stability", long_advection, 900},
      {11, "CLI determinism", cli_determinism, 0},
  };
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!pick.empty() && std::find(pick.begin(), pick.end(), c.id) == pick.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = num(secs) + " s";
    if (c.budget_s > 0.0) {
      timing += " of " + num(c.budget_s) + " s";
      if (secs > c.budget_s) {
        o.pass = false;
        timing += " (over budget)";
      }
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << " [" << timing
              << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
