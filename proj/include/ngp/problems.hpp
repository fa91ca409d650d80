#pragma once

// The four benchmark problems: domains, operators, schemes, boundary
// functionals, initial data and reference solutions.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ngp/gp.hpp"
#include "ngp/quadrature.hpp"
#include "ngp/schemes.hpp"

namespace ngp {

enum class ProblemName { burgers, wave, advection, heat };

inline std::string to_string(ProblemName p) {
  switch (p) {
    case ProblemName::burgers: return "burgers";
    case ProblemName::wave: return "wave";
    case ProblemName::advection: return "advection";
    case ProblemName::heat: return "heat";
  }
  return "?";
}

inline ProblemName parse_problem_name(const std::string& s) {
  for (auto p : {ProblemName::burgers, ProblemName::wave, ProblemName::advection, ProblemName::heat})
    if (to_string(p) == s) return p;
  throw InvalidArgument("unknown problem '" + s + "'");
}

/// Interval (dim 1, second coordinate unused) or axis-aligned rectangle.
struct Domain {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{1.0, 0.0};

  bool contains(const Point& x, double tol = 1e-12) const {
    for (int d = 0; d < dim; ++d)
      if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
    return true;
  }
  double measure() const {
    double m = 1.0;
    for (int d = 0; d < dim; ++d) m *= hi[d] - lo[d];
    return m;
  }
  template <typename Rng>
  Point sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point x{0.0, 0.0};
    for (int d = 0; d < dim; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * u(rng);
    return x;
  }
};

enum class BoundaryKind { dirichlet, neumann, periodic_difference };

inline std::string to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::periodic_difference: return "periodic_difference";
  }
  return "?";
}

/// A 2-D edge {x : x[fixed_dim] = value}.
struct Edge {
  int fixed_dim = 0;
  double value = 0.0;
};

struct BoundaryFunctional {
  BoundaryKind kind = BoundaryKind::dirichlet;
  std::vector<Point> locations;  // fixed points; the two anchors of a periodic difference
  std::optional<Edge> edge;      // 2-D: points generated along the edge
  MultiIndex derivative{0, 0};   // Neumann direction
  double target = 0.0;
  std::string applies_to = "u";

  /// Observation points; an edge gets n evenly spaced points at (k + 1/2)/n.
  std::vector<Point> points(const Domain& dom, int n_per_edge) const {
    if (!edge) return locations;
    std::vector<Point> out;
    const int free = 1 - edge->fixed_dim;
    for (int k = 0; k < n_per_edge; ++k) {
      Point x{0.0, 0.0};
      x[edge->fixed_dim] = edge->value;
      x[free] = dom.lo[free] + (dom.hi[free] - dom.lo[free]) * (k + 0.5) / n_per_edge;
      out.push_back(x);
    }
    return out;
  }
};

using Scheme = std::variant<LmmScheme, ButcherTableau>;

struct ProblemSpec {
  ProblemName name = ProblemName::advection;
  Domain domain;
  DiffOp op;  // L_x; for Burgers only the viscous part, the convective part depends on the previous mean
  Scheme scheme;
  std::vector<BoundaryFunctional> boundary;
  double T = 1.0;
  double dt = 0.1;
  double nu = 0.0;
  KernelFamily kernel = KernelFamily::SE1D;
  std::vector<std::string> fields{"u"};
  int default_initial = 50;
  std::vector<int> default_artificial{50};  // per field
  std::vector<int> default_artificial_noiseless{};  // empty: same as default_artificial
  int boundary_points_per_edge = 1;

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    if (name == ProblemName::burgers && !(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
    if (default_artificial.size() != fields.size()) throw InvalidArgument("artificial counts per field mismatch");
  }
};

struct ProblemOverrides {
  std::optional<double> dt;
  std::optional<double> T;
  std::optional<double> nu;
  std::optional<int> boundary_points_per_edge;
};

inline ProblemSpec make_problem(ProblemName name, const ProblemOverrides& ov = {}) {
  ProblemSpec p;
  p.name = name;
  switch (name) {
    case ProblemName::burgers:
      p.domain = {1, {-1.0, 0.0}, {1.0, 0.0}};
      p.nu = 0.01 / std::numbers::pi;
      p.scheme = LmmScheme::backward_euler();
      p.boundary = {{BoundaryKind::dirichlet, {{-1.0, 0.0}, {1.0, 0.0}}, {}, {0, 0}, 0.0, "u"}};
      p.T = 1.0;
      p.dt = 0.01;
      p.kernel = KernelFamily::NN1D;
      p.default_initial = 31;
      p.default_artificial = {31};
      p.default_artificial_noiseless = {101};
      break;
    case ProblemName::wave:
      p.domain = {1, {0.0, 0.0}, {1.0, 0.0}};
      p.scheme = LmmScheme::trapezoidal();
      p.boundary = {{BoundaryKind::dirichlet, {{0.0, 0.0}, {1.0, 0.0}}, {}, {0, 0}, 0.0, "u"}};
      p.T = 1.5;
      p.dt = 0.01;
      p.fields = {"u", "v"};
      p.default_initial = 51;
      p.default_artificial = {51, 49};
      break;
    case ProblemName::advection:
      p.domain = {1, {0.0, 0.0}, {1.0, 0.0}};
      p.op = DiffOp::d1(-1.0);
      p.scheme = ButcherTableau::gauss_legendre2();
      p.boundary = {{BoundaryKind::periodic_difference, {{1.0, 0.0}, {0.0, 0.0}}, {}, {0, 0}, 0.0, "u"}};
      p.T = 99.0;
      p.dt = 0.1;
      p.default_initial = 25;
      p.default_artificial = {25};
      break;
    case ProblemName::heat:
      p.domain = {2, {0.0, 0.0}, {1.0, 1.0}};
      p.op = DiffOp::laplacian2d();
      p.scheme = ButcherTableau::rk_trapezoidal();
      p.boundary = {{BoundaryKind::dirichlet, {}, Edge{0, 0.0}, {0, 0}, 0.0, "u"},
                    {BoundaryKind::dirichlet, {}, Edge{0, 1.0}, {0, 0}, 0.0, "u"},
                    {BoundaryKind::dirichlet, {}, Edge{1, 0.0}, {0, 0}, 0.0, "u"},
                    {BoundaryKind::neumann, {}, Edge{1, 1.0}, {0, 1}, 0.0, "v"}};
      p.T = 0.2;
      p.dt = 0.01;
      p.kernel = KernelFamily::SE2D_ANISO;
      p.default_initial = 20;
      p.default_artificial = {20};
      p.boundary_points_per_edge = 3;
      break;
  }
  if (name == ProblemName::burgers) p.op = DiffOp::d2(p.nu);
  if (ov.dt) p.dt = *ov.dt;
  if (ov.T) p.T = *ov.T;
  if (ov.nu) {
    if (name != ProblemName::burgers) throw InvalidArgument("viscosity applies to burgers only");
    p.nu = *ov.nu;
    p.op = DiffOp::d2(p.nu);
  }
  if (ov.boundary_points_per_edge) {
    if (*ov.boundary_points_per_edge < 1) throw InvalidArgument("boundary point count must be positive");
    p.boundary_points_per_edge = *ov.boundary_points_per_edge;
  }
  p.validate();
  return p;
}

inline ProblemSpec make_problem(const std::string& name, const ProblemOverrides& ov = {}) {
  return make_problem(parse_problem_name(name), ov);
}

// ---------------------------------------------------------------- reference solutions

/// Closed-form solution of field `field` ("u", or "v" = u_t for wave).
inline double analytic_solution(const ProblemSpec& p, double t, const Point& x, const std::string& field = "u") {
  constexpr double pi = std::numbers::pi;
  switch (p.name) {
    case ProblemName::burgers:
      throw NoClosedForm("burgers has no closed-form solution; use burgers_reference");
    case ProblemName::wave:
      if (field == "v") {
        return -0.5 * pi * std::sin(pi * x[0]) * std::sin(pi * t) + pi * std::sin(3 * pi * x[0]) * std::cos(3 * pi * t);
      }
      return 0.5 * std::sin(pi * x[0]) * std::cos(pi * t) + std::sin(3 * pi * x[0]) * std::sin(3 * pi * t) / 3.0;
    case ProblemName::advection:
      return std::sin(2 * pi * (x[0] - t));
    case ProblemName::heat:
      return std::exp(-1.25 * pi * pi * t) * std::sin(pi * x[0]) * std::sin(0.5 * pi * x[1]);
  }
  return 0.0;
}

namespace detail {

// Cole-Hopf solution for u(0,x) = -sin(pi x) with an n-node Gauss-Hermite rule.
inline double burgers_cole_hopf(double t, double x, double nu, int n) {
  constexpr double pi = std::numbers::pi;
  const auto& rule = gauss_hermite(n);
  const double s = std::sqrt(4.0 * nu * t);
  std::vector<double> expo(rule.nodes.size());
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double y = x - s * rule.nodes[i];
    expo[i] = rule.log_weights[i] - std::cos(pi * y) / (2.0 * pi * nu);
    emax = std::max(emax, expo[i]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double y = x - s * rule.nodes[i];
    const double w = std::exp(expo[i] - emax);
    num += w * std::sin(pi * y);
    den += w;
  }
  return -num / den;
}

}  // namespace detail

/// Viscous Burgers solution with u(0,x) = -sin(pi x) and zero Dirichlet data
/// at x = ±1, by Cole-Hopf and Gauss-Hermite quadrature. The 64- and 128-node
/// values must agree to 1e-6·max(1,|u|); otherwise 256 nodes are compared
/// with 128, and a remaining gap above 1e-4 is an oracle failure.
inline double burgers_reference(double t, double x, double nu) {
  if (t < 0.0) throw InvalidArgument("burgers_reference: negative time");
  if (!(nu > 0.0)) throw InvalidArgument("burgers_reference: viscosity must be positive");
  if (t == 0.0) return -std::sin(std::numbers::pi * x);
  const double a = detail::burgers_cole_hopf(t, x, nu, 64);
  const double b = detail::burgers_cole_hopf(t, x, nu, 128);
  if (std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b))) return b;
  const double c = detail::burgers_cole_hopf(t, x, nu, 256);
  if (std::abs(b - c) <= 1e-6 * std::max(1.0, std::abs(c))) return c;
  if (std::abs(b - c) > 1e-4) {
    throw OracleFailure("Burgers quadrature not converged at t=" + std::to_string(t) + ", x=" + std::to_string(x));
  }
  return c;
}

/// Reference value of `field` at (t, x): closed form, or the Burgers oracle.
inline double reference_solution(const ProblemSpec& p, double t, const Point& x, const std::string& field = "u") {
  if (p.name == ProblemName::burgers) return burgers_reference(t, x[0], p.nu);
  return analytic_solution(p, t, x, field);
}

// ---------------------------------------------------------------- initial data

struct InitialField {
  std::string name;
  std::vector<Point> locations;
  Eigen::VectorXd values;
};

struct InitialData {
  std::vector<InitialField> fields;
  double sigma0 = 0.0;
  std::uint64_t seed = 0;

  const InitialField& field(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return f;
    throw InvalidArgument("initial data has no field '" + name + "'");
  }
};

/// n uniform-random locations per field, values = truth + N(0, sigma0²).
inline InitialData initial_data(const ProblemSpec& p, const std::vector<int>& n, double sigma0, std::uint64_t seed) {
  if (n.size() != p.fields.size()) throw InvalidArgument("initial_data needs one count per field");
  if (!(sigma0 >= 0.0)) throw InvalidArgument("sigma0 must be non-negative");
  InitialData out{{}, sigma0, seed};
  for (std::size_t f = 0; f < p.fields.size(); ++f) {
    if (n[f] < 2) throw InvalidArgument("initial_data needs at least two points");
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x1417u,
                     static_cast<std::uint32_t>(f)};
    std::mt19937_64 rng(sq);
    std::normal_distribution<double> noise(0.0, 1.0);
    InitialField fld{p.fields[f], {}, Eigen::VectorXd(n[f])};
    for (int i = 0; i < n[f]; ++i) {
      fld.locations.push_back(p.domain.sample(rng));
      double v = reference_solution(p, 0.0, fld.locations.back(), p.fields[f]);
      if (sigma0 > 0.0) v += sigma0 * noise(rng);
      fld.values[i] = v;
    }
    out.fields.push_back(std::move(fld));
  }
  return out;
}

inline InitialData initial_data(const ProblemSpec& p, int n, double sigma0, std::uint64_t seed) {
  return initial_data(p, std::vector<int>(p.fields.size(), n), sigma0, seed);
}

// ---------------------------------------------------------------- boundary rows

/// Adds one boundary label per (solution label, functional kind) to `bk` and
/// returns the matching data blocks. Dirichlet rows observe the label itself,
/// Neumann rows its normal derivative (label "v..."), periodic rows the
/// difference of its values at the two anchors.
inline std::vector<DataBlock> boundary_rows(const ProblemSpec& p, BlockKernel& bk,
                                            const std::vector<std::string>& step_labels,
                                            std::optional<std::size_t> noise = {}) {
  std::vector<DataBlock> out;
  for (const auto& label : step_labels) {
    bk.label_index(label);
    const std::string derived = (!label.empty() && label[0] == 'u') ? "v" + label.substr(1) : "d(" + label + ")";
    for (const auto& bf : p.boundary) {
      std::string name;
      std::vector<Point> pts;
      switch (bf.kind) {
        case BoundaryKind::dirichlet:
          name = label + "_D";
          pts = bf.points(p.domain, p.boundary_points_per_edge);
          if (!bk.find_label(name)) bk.add_derived_label(name, label, DiffOp::identity(), noise);
          break;
        case BoundaryKind::neumann:
          name = derived + "_N";
          pts = bf.points(p.domain, p.boundary_points_per_edge);
          if (!bk.find_label(name)) bk.add_derived_label(name, label, DiffOp::derivative(bf.derivative), noise);
          break;
        case BoundaryKind::periodic_difference:
          if (bf.locations.size() != 2) throw InvalidArgument("periodic difference needs two anchors");
          name = label + "_per";
          pts = {bf.locations[0]};
          if (!bk.find_label(name)) {
            bk.add_functional_label(name, label, {{1.0, bf.locations[0]}, {-1.0, bf.locations[1]}}, noise);
          }
          break;
      }
      auto it = std::find_if(out.begin(), out.end(), [&](const DataBlock& b) { return b.label == name; });
      if (it == out.end()) {
        out.push_back({name, {}, Eigen::VectorXd(), {}});
        it = out.end() - 1;
      }
      const auto old = it->values.size();
      it->locations.insert(it->locations.end(), pts.begin(), pts.end());
      it->values.conservativeResize(old + static_cast<Eigen::Index>(pts.size()));
      it->values.tail(static_cast<Eigen::Index>(pts.size())).setConstant(bf.target);
    }
  }
  return out;
}

}  // namespace ngp
