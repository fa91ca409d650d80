#pragma once

// Command-line front end: solve, converge and validate-kernels.
//
// Exit codes: 0 success, 1 validation or solver failure, 2 usage error,
// 3 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ngp/driver.hpp"
#include "ngp/fd_oracle.hpp"
#include "ngp/io.hpp"

namespace ngp::cli {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3 };

struct CliConfig {
  std::string subcommand;
  std::string problem;
  std::optional<double> dt, T, nu;
  double noise = 0.0;
  std::vector<int> n_initial, n_artificial;
  std::uint64_t seed = 0;
  std::optional<int> boundary_points;
  std::string out = ".";
  std::vector<std::string> formats{"csv"};
  bool timing = false;
  int jobs = 1;
  std::vector<double> dt_list, n_list;
  bool warm_start = true;
  bool oracle = false;
  bool fixed_locations = false;
  bool sample_artificial = false;
  int train_starts = 1;

  bool wants(const std::string& f) const { return std::find(formats.begin(), formats.end(), f) != formats.end(); }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

struct Parsed {
  std::optional<CliConfig> config;  // empty: exit with `code`
  int code = kOk;
};

/// Parses argv. Help requests return code 0 without a config, usage errors 2.
inline Parsed parse(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig c;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> formats;
  bool no_warm = false;

  CLI::App app{"Numerical Gaussian process solver for time-dependent linear and linearized PDEs", "ngp"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);

  auto add_problem_opts = [&](CLI::App* s) {
    s->add_option("--problem", c.problem, "burgers | wave | advection | heat")
        ->required()
        ->check(CLI::IsMember({"burgers", "wave", "advection", "heat"}));
    s->add_option("--T", c.T, "final time")->check(CLI::PositiveNumber);
    s->add_option("--nu", c.nu, "viscosity (burgers)")->check(CLI::PositiveNumber);
    s->add_option("--noise", c.noise, "initial-data noise standard deviation")->check(CLI::NonNegativeNumber);
    s->add_option("--n-initial", c.n_initial, "initial points per field")->delimiter(',')->check(CLI::Range(2, 100000));
    s->add_option("--n-artificial", c.n_artificial, "artificial points per field")
        ->delimiter(',')
        ->check(CLI::Range(2, 100000));
    s->add_option("--boundary-points", c.boundary_points, "points per boundary edge (heat)")->check(CLI::Range(1, 10000));
    s->add_option("--seed", seed, "random seed (overrides NGP_SEED)");
    s->add_option("--out", c.out, "output directory");
    s->add_option("--format", formats, "csv,json,svg")->delimiter(',')->check(CLI::IsMember({"csv", "json", "svg"}));
    s->add_flag("--timing", c.timing, "record wall-clock times in steps.csv");
    s->add_flag("--no-warm-start", no_warm, "train every step from the bootstrap parameters");
    s->add_flag("--oracle", c.oracle, "exact artificial values and zero previous covariance");
    s->add_flag("--fixed-locations", c.fixed_locations, "reuse the first step's artificial locations");
    s->add_flag("--sample-artificial", c.sample_artificial, "train on draws from the previous state");
    s->add_option("--train-starts", c.train_starts, "optimizer starts per step")->check(CLI::Range(1, 100));
  };

  auto* solve = app.add_subcommand("solve", "run the time stepper and write per-step results");
  add_problem_opts(solve);
  solve->add_option("--dt", c.dt, "time step")->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("converge", "final-time error over a sweep of dt or point counts");
  add_problem_opts(conv);
  conv->add_option("--dt", c.dt, "time step (point-count sweeps)")->check(CLI::PositiveNumber);
  auto* dtl = conv->add_option("--dt-list", c.dt_list, "comma-separated time steps")
                  ->delimiter(',')
                  ->check(CLI::PositiveNumber);
  auto* nl = conv->add_option("--n-list", c.n_list, "comma-separated point counts")->delimiter(',');
  dtl->excludes(nl);
  conv->add_option("--jobs", c.jobs, "parallel runs")->check(CLI::Range(1, 256));

  app.add_subcommand("validate-kernels", "check closed-form kernel derivatives against finite differences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return {std::nullopt, kOk};
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return {std::nullopt, kOk};
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'ngp --help' for usage\n";
    return {std::nullopt, kUsage};
  }

  try {
    c.subcommand = app.get_subcommands().front()->get_name();
    c.warm_start = !no_warm;
    if (!formats.empty()) c.formats = formats;
    if (seed) {
      c.seed = *seed;
    } else if (const char* env = std::getenv("NGP_SEED")) {
      std::size_t pos = 0;
      const std::string s = env;
      try {
        c.seed = std::stoull(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != s.size()) throw UsageError("NGP_SEED must be a non-negative integer");
    }
    if (c.subcommand == "converge") {
      if (c.dt_list.empty() && c.n_list.empty()) throw UsageError("converge needs --dt-list or --n-list");
      const auto n = std::max(c.dt_list.size(), c.n_list.size());
      if (n < 3) throw UsageError("a sweep needs at least three values");
      for (double v : c.n_list)
        if (v < 2 || v != std::floor(v)) throw UsageError("--n-list entries must be integers >= 2");
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return {std::nullopt, kUsage};
  }
  return {c, kOk};
}

// ---------------------------------------------------------------- execution

/// Problem and run configuration resolved from the command line.
struct Resolved {
  ProblemSpec problem;
  RunConfig run;
};

inline std::vector<int> per_field(const std::vector<int>& v, std::size_t fields, const char* what) {
  if (v.empty()) return {};
  if (v.size() == 1) return std::vector<int>(fields, v[0]);
  if (v.size() != fields) {
    throw UsageError(std::string(what) + " takes 1 or " + std::to_string(fields) + " values");
  }
  return v;
}

inline Resolved resolve(const CliConfig& c) {
  ProblemOverrides ov;
  ov.T = c.T;
  ov.nu = c.nu;
  ov.boundary_points_per_edge = c.boundary_points;
  Resolved r;
  try {
    r.problem = make_problem(c.problem, ov);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto& p = r.problem;
  RunConfig& rc = r.run;
  rc.dt = c.dt.value_or(p.dt);
  if (rc.dt > p.T) throw UsageError("dt exceeds the final time");
  rc.n_steps = std::max(1, static_cast<int>(std::floor(p.T / rc.dt + 1e-9)));
  rc.noise0 = c.noise;
  rc.seed = c.seed;
  rc.n_initial = per_field(c.n_initial, p.fields.size(), "--n-initial");
  rc.n_artificial = per_field(c.n_artificial, p.fields.size(), "--n-artificial");
  rc.warm_start = c.warm_start;
  rc.oracle_mode = c.oracle;
  rc.fixed_locations = c.fixed_locations;
  rc.sample_artificial = c.sample_artificial;
  rc.train_starts = c.train_starts;
  try {
    rc.validate(p);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return r;
}

namespace detail {

inline std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return dir;
}

template <typename F>
void write_file(const std::filesystem::path& path, F&& body) {
  std::ostringstream ss;
  body(ss);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << ss.str();
  f.flush();
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace detail

inline int run_solve(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto r = resolve(c);
  const auto dir = detail::prepare_dir(c.out);
  const RunResult res = run(r.problem, r.run);
  if (res.steps.empty()) {
    err << "error: " << res.failure.value_or("no steps completed") << "\n";
    return kFailure;
  }
  if (c.wants("csv")) {
    detail::write_file(dir / "steps.csv", [&](std::ostream& os) { io::write_steps_csv(os, res.steps, c.timing); });
  }
  if (c.wants("json")) {
    detail::write_file(dir / "state_final.json",
                       [&](std::ostream& os) { io::write_state_json(os, res.steps.back().state, r.problem.domain.dim); });
  }
  if (c.wants("svg")) {
    detail::write_file(dir / "error.svg", [&](std::ostream& os) { io::write_error_svg(os, res.steps); });
    if (r.problem.domain.dim == 1) {
      for (const auto& f : r.problem.fields) {
        detail::write_file(dir / ("state_" + f + ".svg"),
                           [&](std::ostream& os) { io::write_band_svg(os, r.problem, res.steps.back().state, f); });
      }
    }
  }
  const auto& last = res.steps.back();
  out << to_string(r.problem.name) << ": " << res.steps.size() << " steps to t=" << io::fmt(last.time);
  if (last.rel_l2_error) out << ", rel_l2_error=" << io::fmt(*last.rel_l2_error);
  out << ", trace_cov=" << io::fmt(last.trace_cov) << "\n";
  if (!res.ok()) {
    err << "error: " << *res.failure << "\n";
    return kFailure;
  }
  return kOk;
}

inline int run_converge(const CliConfig& c, std::ostream& out, std::ostream& err) {
  auto r = resolve(c);
  const auto dir = detail::prepare_dir(c.out);
  const SweepKind kind = c.dt_list.empty() ? SweepKind::n : SweepKind::dt;
  const auto& values = kind == SweepKind::dt ? c.dt_list : c.n_list;
  for (double v : values)
    if (kind == SweepKind::dt && v > r.problem.T) throw UsageError("sweep dt exceeds the final time");
  const auto rep = convergence_sweep(r.problem, r.run, kind, values, c.jobs);
  if (c.wants("csv")) {
    detail::write_file(dir / "convergence.csv", [&](std::ostream& os) { io::write_convergence_csv(os, rep); });
  }
  if (c.wants("json")) {
    detail::write_file(dir / "convergence.json", [&](std::ostream& os) { io::write_sweep_json(os, rep); });
  }
  if (c.wants("svg")) {
    detail::write_file(dir / "convergence.svg", [&](std::ostream& os) { io::write_convergence_svg(os, rep); });
  }
  for (const auto& p : rep.points) {
    out << io::fmt(p.value) << " ";
    if (p.rel_l2_error) {
      out << io::fmt(*p.rel_l2_error) << "\n";
    } else {
      out << "failed: " << p.failure << "\n";
    }
  }
  if (!rep.fit) {
    err << "error: fewer than three sweep runs succeeded; no slope\n";
    return kFailure;
  }
  out << "fitted_slope=" << io::fmt(rep.fit->slope) << " over " << rep.fit->used << " points\n";
  return kOk;
}

inline int execute(const CliConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.subcommand == "validate-kernels") return validation::validate_kernels(out) == 0 ? kOk : kFailure;
    if (c.subcommand == "solve") return run_solve(c, out, err);
    if (c.subcommand == "converge") return run_converge(c, out, err);
    err << "error: unknown subcommand '" << c.subcommand << "'\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto parsed = parse(argc, argv, out, err);
  if (!parsed.config) return parsed.code;
  return execute(*parsed.config, out, err);
}

}  // namespace ngp::cli
