#pragma once

// Block kernels encoding time-stepping schemes.
//
// Priors are placed on latent fields from which every other time level is
// reached by applying (never inverting) a differential operator.

#include <cmath>
#include <string>
#include <vector>

#include "ngp/block_kernel.hpp"

namespace ngp {

/// u^n = sum_i alpha_i u^{n-i} + dt sum_{i=0..m} beta_i L u^{n-i}.
struct LmmScheme {
  std::string name;
  int m = 1;
  std::vector<double> alpha;  // alpha_1..alpha_m
  std::vector<double> beta;   // beta_0..beta_m
  double tau = 0.0;

  static LmmScheme forward_euler() { return {"forward_euler", 1, {1.0}, {0.0, 1.0}, 0.0}; }
  static LmmScheme backward_euler() { return {"backward_euler", 1, {1.0}, {1.0, 0.0}, 1.0}; }
  static LmmScheme trapezoidal() { return {"trapezoidal", 1, {1.0}, {0.5, 0.5}, 0.5}; }

  void validate() const {
    if (m < 1) throw InvalidArgument("LMM step count must be positive");
    if (alpha.size() != static_cast<std::size_t>(m) || beta.size() != static_cast<std::size_t>(m) + 1) {
      throw InvalidArgument("LMM coefficient lengths do not match m");
    }
    if (tau < 0.0 || tau > 1.0) throw InvalidArgument("LMM tau outside [0,1]");
  }

  /// P u = u - dt beta_0 L u
  DiffOp P(const DiffOp& L, double dt) const { return DiffOp::identity() - (dt * beta[0]) * L; }
  /// Q^i u = alpha_i u + dt beta_i L u
  DiffOp Q(int i, const DiffOp& L, double dt) const {
    return alpha.at(i - 1) * DiffOp::identity() + (dt * beta.at(i)) * L;
  }
};

struct ButcherTableau {
  std::string name;
  int q = 0;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> tau;

  static ButcherTableau gauss_legendre2() {
    const double r = std::sqrt(3.0) / 6.0;
    return {"gauss_legendre2", 2, {{0.25, 0.25 - r}, {0.25 + r, 0.25}}, {0.5, 0.5}, {0.5 - r, 0.5 + r}};
  }
  static ButcherTableau rk_trapezoidal() {
    return {"rk_trapezoidal", 2, {{0.0, 0.0}, {0.5, 0.5}}, {0.5, 0.5}, {0.0, 1.0}};
  }

  void validate() const {
    if (q != 2) throw UnsupportedTableau("only two-stage tableaus are supported (got q=" + std::to_string(q) + ")");
    if (a.size() != 2 || a[0].size() != 2 || a[1].size() != 2 || b.size() != 2 || tau.size() != 2) {
      throw InvalidArgument("tableau dimensions do not match q");
    }
    for (double t : tau)
      if (t < 0.0 || t > 1.0) throw InvalidArgument("stage abscissa outside [0,1]");
  }
};

namespace detail {
inline void check_dt(double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be finite and non-negative");
}
}  // namespace detail

/// Labels u^n, u^{n-1}, ..., u^{n-m}; prior j lives on the shifted latent
/// u^{n-j+1-tau}, so u^n = sum_i Q^i g_i and u^{n-j} = P g_j.
inline BlockKernel lmm_blocks(const LmmScheme& scheme, const DiffOp& L, const std::vector<KernelSpec>& priors,
                              double dt) {
  scheme.validate();
  detail::check_dt(dt);
  if (priors.size() != static_cast<std::size_t>(scheme.m)) {
    throw InvalidArgument("lmm_blocks needs one prior per step");
  }
  BlockKernel bk;
  std::vector<std::size_t> g;
  for (int j = 1; j <= scheme.m; ++j) g.push_back(bk.add_prior("g" + std::to_string(j), priors[j - 1]));
  Label un{"u^n", {}, {}, {}};
  for (int i = 1; i <= scheme.m; ++i) un.parts.push_back({g[i - 1], scheme.Q(i, L, dt)});
  bk.add_label(std::move(un));
  for (int j = 1; j <= scheme.m; ++j) {
    bk.add_label({"u^{n-" + std::to_string(j) + "}", {{g[j - 1], scheme.P(L, dt)}}, {}, {}});
  }
  return bk;
}

/// Backward Euler for u_t + u u_x = nu u_xx linearized about the previous
/// mean: u^n + dt mu^{n-1} u^n_x - nu dt u^n_xx = u^{n-1}.
inline BlockKernel burgers_backward_euler_blocks(const ScalarField& mu_prev, double nu, double dt,
                                                 const KernelSpec& base) {
  if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
  if (!mu_prev) throw InvalidArgument("previous mean is not evaluable");
  const DiffOp L = DiffOp::d2(nu) - DiffOp::d1().times(mu_prev);
  return lmm_blocks(LmmScheme::backward_euler(), L, {base}, dt);
}

/// Label name of stage i (1-based) of a two-stage scheme.
inline std::string rk_stage_label(const ButcherTableau& t, int i) {
  const double tau = t.tau.at(i - 1);
  if (tau == 1.0) return "u^{n+1}";
  if (tau == 0.0) return "u^n";
  return "u^{n+tau" + std::to_string(i) + "}";
}

/// Priors a two-stage builder expects, in order: u^{n+1}, then each stage
/// whose abscissa is not 1.
inline std::vector<std::string> rk_prior_labels(const ButcherTableau& t) {
  t.validate();
  std::vector<std::string> out{"u^{n+1}"};
  for (int i = 1; i <= t.q; ++i) {
    const auto name = rk_stage_label(t, i);
    if (name != "u^{n+1}") out.push_back(name);
  }
  return out;
}

/// Runge-Kutta labels: the stage fields, u^n_{q+1} = u^{n+1} - dt sum b_i L u^{n+tau_i}
/// and u^n_i = u^{n+tau_i} - dt sum_j a_ij L u^{n+tau_j}. A stage row equal to b
/// duplicates u^n_{q+1} and is omitted.
inline BlockKernel rk_blocks(const ButcherTableau& t, const DiffOp& L, const std::vector<KernelSpec>& priors,
                             double dt) {
  t.validate();
  detail::check_dt(dt);
  const auto names = rk_prior_labels(t);
  if (priors.size() != names.size()) {
    throw InvalidArgument("rk_blocks needs " + std::to_string(names.size()) + " priors");
  }
  BlockKernel bk;
  for (std::size_t p = 0; p < names.size(); ++p) bk.add_prior(names[p], priors[p]);
  for (std::size_t p = 0; p < names.size(); ++p) bk.add_label({names[p], {{p, DiffOp::identity()}}, {}, {}});
  auto stage_prior = [&](int i) { return *bk.find_prior(rk_stage_label(t, i)); };

  const std::size_t top = *bk.find_prior("u^{n+1}");
  Label last{"u^n_" + std::to_string(t.q + 1), {{top, DiffOp::identity()}}, {}, {}};
  for (int i = 1; i <= t.q; ++i) last.parts.push_back({stage_prior(i), (-dt * t.b[i - 1]) * L});
  bk.add_label(std::move(last));
  for (int i = t.q; i >= 1; --i) {
    if (t.a[i - 1] == t.b) continue;
    Label li{"u^n_" + std::to_string(i), {{stage_prior(i), DiffOp::identity()}}, {}, {}};
    for (int j = 1; j <= t.q; ++j) li.parts.push_back({stage_prior(j), (-dt * t.a[i - 1][j - 1]) * L});
    bk.add_label(std::move(li));
  }
  return bk;
}

/// Trapezoidal rule for u_t = v, v_t = u_xx with priors on u^{n-1/2}, v^{n-1/2}.
inline BlockKernel wave_trapezoidal_blocks(double dt, const KernelSpec& ku, const KernelSpec& kv) {
  detail::check_dt(dt);
  if (ku.family != KernelFamily::SE1D || kv.family != KernelFamily::SE1D) {
    throw InvalidArgument("wave priors must be SE1D");
  }
  BlockKernel bk;
  const auto gu = bk.add_prior("u^{n-1/2}", ku);
  const auto gv = bk.add_prior("v^{n-1/2}", kv);
  const double h = 0.5 * dt;
  bk.add_label({"u^n", {{gu, DiffOp::identity()}, {gv, h * DiffOp::identity()}}, {}, {}});
  bk.add_label({"v^n", {{gv, DiffOp::identity()}, {gu, DiffOp::d2(h)}}, {}, {}});
  bk.add_label({"u^{n-1}", {{gu, DiffOp::identity()}, {gv, -h * DiffOp::identity()}}, {}, {}});
  bk.add_label({"v^{n-1}", {{gv, DiffOp::identity()}, {gu, DiffOp::d2(-h)}}, {}, {}});
  return bk;
}

}  // namespace ngp
