#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ngp/driver.hpp"
#include "ngp/schemes.hpp"

using namespace ngp;

namespace {

std::vector<std::pair<Point, Point>> random_pairs(int n, int dim, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::pair<Point, Point>> out;
  for (int i = 0; i < n; ++i) {
    Point x{u(rng), dim == 2 ? u(rng) : 0.0};
    Point y{u(rng), dim == 2 ? u(rng) : 0.0};
    out.push_back({x, y});
  }
  return out;
}

double k(const KernelSpec& s, const Point& x, const Point& y, int l = 0, int r = 0) {
  return eval_kernel(x, y, s, DerivOrder::of(l, r));
}

void expect_close(double a, double b, double rel = 1e-12) { EXPECT_NEAR(a, b, rel * (1.0 + std::abs(b))); }

// Every label at its own random point set; all blocks must factor.
void expect_spd(const BlockKernel& bk, int dim, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::uniform_int_distribution<int> count(1, std::max(1, 12 / static_cast<int>(bk.labels().size())));
  for (int trial = 0; trial < 20; ++trial) {
    TrainingSet d;
    for (const auto& l : bk.labels()) {
      std::vector<Point> pts;
      const int n = count(rng);
      for (int i = 0; i < n; ++i) pts.push_back({u(rng), dim == 2 ? u(rng) : 0.0});
      d.blocks.push_back({l.name, pts, Eigen::VectorXd::Zero(n), {}});
    }
    const Eigen::MatrixXd K = assemble(bk, d);
    EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NO_THROW(chol(K)) << "trial " << trial;
  }
}

void expect_block_symmetry(const BlockKernel& bk, int dim, std::uint64_t seed) {
  for (std::size_t i = 0; i < bk.labels().size(); ++i)
    for (std::size_t j = 0; j < bk.labels().size(); ++j) {
      const auto kij = bk.entry(i, j);
      const auto kji = bk.entry(j, i);
      for (const auto& [x, y] : random_pairs(5, dim, seed + 10 * i + j)) {
        expect_close(kij(x, y), kji(y, x), 1e-11);
      }
    }
}

}  // namespace

// ---------------------------------------------------------------- LMM

TEST(LmmScheme, TableConstants) {
  const auto fe = LmmScheme::forward_euler();
  EXPECT_EQ(fe.m, 1);
  EXPECT_EQ(fe.alpha, std::vector<double>({1.0}));
  EXPECT_EQ(fe.beta, std::vector<double>({0.0, 1.0}));
  EXPECT_EQ(fe.tau, 0.0);
  const auto be = LmmScheme::backward_euler();
  EXPECT_EQ(be.beta, std::vector<double>({1.0, 0.0}));
  EXPECT_EQ(be.tau, 1.0);
  const auto tr = LmmScheme::trapezoidal();
  EXPECT_EQ(tr.beta, std::vector<double>({0.5, 0.5}));
  EXPECT_EQ(tr.tau, 0.5);
}

TEST(LmmScheme, RejectsInconsistentLengths) {
  LmmScheme s{"bad", 2, {1.0}, {0.5, 0.5}, 0.5};
  EXPECT_THROW(s.validate(), InvalidArgument);
  EXPECT_THROW(lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {}, 0.1), InvalidArgument);
  EXPECT_THROW(lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {KernelSpec::se1d(1, 1)}, -0.1), InvalidArgument);
}

TEST(LmmBlocks, ForwardEulerWithZeroOperatorIsBaseKernel) {
  const auto base = KernelSpec::se1d(1.3, 4.0);
  const auto bk = lmm_blocks(LmmScheme::forward_euler(), DiffOp::zero(), {base}, 0.1);
  for (const auto& [x, y] : random_pairs(5, 1, 1)) {
    expect_close(bk.entry("u^n", "u^n")(x, y), k(base, x, y));
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y), k(base, x, y));
    expect_close(bk.entry("u^{n-1}", "u^{n-1}")(x, y), k(base, x, y));
  }
}

TEST(LmmBlocks, TrapezoidalWithZeroStepIsBaseKernel) {
  const auto base = KernelSpec::se1d(0.8, 2.0);
  const auto bk = lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {base}, 0.0);
  for (const auto& [x, y] : random_pairs(5, 1, 2)) {
    expect_close(bk.entry("u^n", "u^n")(x, y), k(base, x, y));
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y), k(base, x, y));
    expect_close(bk.entry("u^{n-1}", "u^{n-1}")(x, y), k(base, x, y));
  }
}

TEST(LmmBlocks, BackwardEulerHeatMatchesFourTermExpansion) {
  const auto base = KernelSpec::se1d(1.1, 6.0);
  const double dt = 0.02;
  const auto bk = lmm_blocks(LmmScheme::backward_euler(), DiffOp::d2(), {base}, dt);
  for (const auto& [x, y] : random_pairs(5, 1, 3)) {
    const double manual = k(base, x, y) - dt * k(base, x, y, 2, 0) - dt * k(base, x, y, 0, 2) +
                          dt * dt * k(base, x, y, 2, 2);
    expect_close(bk.entry("u^{n-1}", "u^{n-1}")(x, y), manual);
    expect_close(bk.entry("u^n", "u^n")(x, y), k(base, x, y));
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y), k(base, x, y) - dt * k(base, x, y, 0, 2));
  }
}

TEST(LmmBlocks, TrapezoidalHeatBlocks) {
  const auto base = KernelSpec::se1d(1.0, 3.0);
  const double dt = 0.05;
  const auto bk = lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {base}, dt);
  const double h = 0.5 * dt;
  for (const auto& [x, y] : random_pairs(5, 1, 4)) {
    expect_close(bk.entry("u^n", "u^n")(x, y),
                 k(base, x, y) + h * k(base, x, y, 2, 0) + h * k(base, x, y, 0, 2) + h * h * k(base, x, y, 2, 2));
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y),
                 k(base, x, y) + h * k(base, x, y, 2, 0) - h * k(base, x, y, 0, 2) - h * h * k(base, x, y, 2, 2));
  }
}

// ---------------------------------------------------------------- Burgers

TEST(BurgersBlocks, ZeroStepReducesToBaseKernel) {
  const auto base = KernelSpec::nn1d(1.0, 5.0);
  const auto bk = burgers_backward_euler_blocks([](const Point& x) { return std::sin(x[0]); }, 0.01, 0.0, base);
  for (const auto& [x, y] : random_pairs(5, 1, 5, -1.0, 1.0)) {
    expect_close(bk.entry("u^n", "u^n")(x, y), k(base, x, y));
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y), k(base, x, y));
    expect_close(bk.entry("u^{n-1}", "u^{n-1}")(x, y), k(base, x, y));
  }
}

TEST(BurgersBlocks, ZeroMeanGivesHeatOperator) {
  const auto base = KernelSpec::nn1d(0.7, 3.0);
  const double nu = 0.05, dt = 0.1;
  const auto bk = burgers_backward_euler_blocks([](const Point&) { return 0.0; }, nu, dt, base);
  const auto heat = lmm_blocks(LmmScheme::backward_euler(), DiffOp::d2(nu), {base}, dt);
  for (const auto& [x, y] : random_pairs(5, 1, 6, -1.0, 1.0)) {
    for (const char* a : {"u^n", "u^{n-1}"})
      for (const char* b : {"u^n", "u^{n-1}"}) expect_close(bk.entry(a, b)(x, y), heat.entry(a, b)(x, y));
  }
}

TEST(BurgersBlocks, NineTermExpansionWithLinearMean) {
  const auto base = KernelSpec::nn1d(1.2, 4.0);
  const double nu = 0.01 / std::numbers::pi, dt = 0.01;
  auto mu = [](const Point& x) { return x[0]; };
  const auto bk = burgers_backward_euler_blocks(mu, nu, dt, base);
  for (const auto& [x, y] : random_pairs(5, 1, 7, -1.0, 1.0)) {
    const double mx = dt * x[0], my = dt * y[0], v = -nu * dt;
    double nine = 0.0;
    nine += k(base, x, y);
    nine += my * k(base, x, y, 0, 1);
    nine += v * k(base, x, y, 0, 2);
    nine += mx * k(base, x, y, 1, 0);
    nine += mx * my * k(base, x, y, 1, 1);
    nine += mx * v * k(base, x, y, 1, 2);
    nine += v * k(base, x, y, 2, 0);
    nine += v * my * k(base, x, y, 2, 1);
    nine += v * v * k(base, x, y, 2, 2);
    expect_close(bk.entry("u^{n-1}", "u^{n-1}")(x, y), nine);
    expect_close(bk.entry("u^n", "u^{n-1}")(x, y), k(base, x, y) + my * k(base, x, y, 0, 1) + v * k(base, x, y, 0, 2));
  }
}

TEST(BurgersBlocks, RejectsBadInputs) {
  const auto base = KernelSpec::nn1d(1, 1);
  EXPECT_THROW(burgers_backward_euler_blocks([](const Point&) { return 0.0; }, 0.0, 0.01, base), InvalidArgument);
  EXPECT_THROW(burgers_backward_euler_blocks(ScalarField{}, 0.01, 0.01, base), InvalidArgument);
}

// ---------------------------------------------------------------- Runge-Kutta

TEST(ButcherTableau, GaussLegendreConstants) {
  const auto t = ButcherTableau::gauss_legendre2();
  const double r = std::sqrt(3.0) / 6.0;
  EXPECT_DOUBLE_EQ(t.tau[0], 0.5 - r);
  EXPECT_NEAR(t.tau[0], 0.211325, 1e-6);
  EXPECT_DOUBLE_EQ(t.tau[1], 0.5 + r);
  EXPECT_EQ(t.b, std::vector<double>({0.5, 0.5}));
  EXPECT_DOUBLE_EQ(t.a[0][0], 0.25);
  EXPECT_DOUBLE_EQ(t.a[1][1], 0.25);
  EXPECT_DOUBLE_EQ(t.a[0][1], 0.25 - r);
  EXPECT_DOUBLE_EQ(t.a[1][0], 0.25 + r);
}

TEST(ButcherTableau, TrapezoidalConstants) {
  const auto t = ButcherTableau::rk_trapezoidal();
  EXPECT_EQ(t.tau, std::vector<double>({0.0, 1.0}));
  EXPECT_EQ(t.b, std::vector<double>({0.5, 0.5}));
  EXPECT_EQ(t.a[0], std::vector<double>({0.0, 0.0}));
  EXPECT_EQ(t.a[1], std::vector<double>({0.5, 0.5}));
}

TEST(RkBlocks, RejectsOtherStageCounts) {
  ButcherTableau t{"three", 3, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}, {1, 0, 0}, {0, 0.5, 1}};
  EXPECT_THROW(rk_blocks(t, DiffOp::d1(-1.0), {}, 0.1), UnsupportedTableau);
}

TEST(RkBlocks, GaussLegendreLabels) {
  const auto t = ButcherTableau::gauss_legendre2();
  const auto base = KernelSpec::se1d(1, 10);
  const auto bk = rk_blocks(t, DiffOp::d1(-1.0), {base, base, base}, 0.1);
  std::vector<std::string> names;
  for (const auto& l : bk.labels()) names.push_back(l.name);
  EXPECT_EQ(names, std::vector<std::string>({"u^{n+1}", "u^{n+tau1}", "u^{n+tau2}", "u^n_3", "u^n_2", "u^n_1"}));
  EXPECT_FALSE(bk.correlated(bk.label_index("u^{n+1}"), bk.label_index("u^{n+tau1}")));
}

TEST(RkBlocks, ZeroStepReducesToPriors) {
  const auto t = ButcherTableau::gauss_legendre2();
  const auto k1 = KernelSpec::se1d(2.0, 5.0), k2 = KernelSpec::se1d(0.5, 9.0), k3 = KernelSpec::se1d(1.5, 3.0);
  const auto bk = rk_blocks(t, DiffOp::d1(-1.0), {k1, k2, k3}, 0.0);
  for (const auto& [x, y] : random_pairs(5, 1, 8)) {
    expect_close(bk.entry("u^n_3", "u^n_3")(x, y), k(k1, x, y));
    expect_close(bk.entry("u^{n+1}", "u^n_3")(x, y), k(k1, x, y));
    expect_close(bk.entry("u^n_1", "u^n_1")(x, y), k(k2, x, y));
    expect_close(bk.entry("u^n_2", "u^n_2")(x, y), k(k3, x, y));
    EXPECT_EQ(bk.entry("u^n_2", "u^n_1")(x, y), 0.0);
    EXPECT_EQ(bk.entry("u^n_3", "u^n_1")(x, y), 0.0);
  }
}

TEST(RkBlocks, AdvectionCrossBlockMatchesFourTermExpansion) {
  const auto t = ButcherTableau::gauss_legendre2();
  const auto kn = KernelSpec::se1d(1.0, 7.0), k1 = KernelSpec::se1d(1.4, 5.0), k2 = KernelSpec::se1d(0.6, 11.0);
  const double dt = 0.1;
  const auto bk = rk_blocks(t, DiffOp::d1(-1.0), {kn, k1, k2}, dt);
  const double a11 = t.a[0][0], a12 = t.a[0][1], a21 = t.a[1][0], a22 = t.a[1][1];
  for (const auto& [x, y] : random_pairs(5, 1, 9)) {
    const double expected = a21 * dt * k(k1, x, y, 1, 0) + a21 * a11 * dt * dt * k(k1, x, y, 1, 1) +
                            a12 * dt * k(k2, x, y, 0, 1) + a22 * a12 * dt * dt * k(k2, x, y, 1, 1);
    expect_close(bk.entry("u^n_2", "u^n_1")(x, y), expected);
  }
}

TEST(RkBlocks, TrapezoidalHeatOmitsDuplicateStage) {
  const auto t = ButcherTableau::rk_trapezoidal();
  EXPECT_EQ(rk_prior_labels(t), std::vector<std::string>({"u^{n+1}", "u^n"}));
  const auto base = KernelSpec::se2d(1, 4, 4);
  const auto bk = rk_blocks(t, DiffOp::laplacian2d(), {base, base}, 0.01);
  EXPECT_TRUE(bk.find_label("u^n_3").has_value());
  EXPECT_TRUE(bk.find_label("u^n_1").has_value());
  EXPECT_FALSE(bk.find_label("u^n_2").has_value());
  // u^n_1 = u^n since the first tableau row is zero
  for (const auto& [x, y] : random_pairs(5, 2, 10)) {
    expect_close(bk.entry("u^n_1", "u^n_1")(x, y), k(base, x, y));
  }
}

// ---------------------------------------------------------------- wave

TEST(WaveBlocks, ZeroStepDecouples) {
  const auto ku = KernelSpec::se1d(1.0, 4.0), kv = KernelSpec::se1d(2.0, 9.0);
  const auto bk = wave_trapezoidal_blocks(0.0, ku, kv);
  for (const auto& [x, y] : random_pairs(5, 1, 11)) {
    expect_close(bk.entry("u^n", "u^n")(x, y), k(ku, x, y));
    expect_close(bk.entry("v^n", "v^n")(x, y), k(kv, x, y));
    EXPECT_EQ(bk.entry("u^n", "v^n")(x, y), 0.0);
  }
}

TEST(WaveBlocks, DisplacementBlock) {
  const auto ku = KernelSpec::se1d(1.0, 4.0), kv = KernelSpec::se1d(2.0, 9.0);
  const double dt = 0.01;
  const auto bk = wave_trapezoidal_blocks(dt, ku, kv);
  for (const auto& [x, y] : random_pairs(5, 1, 12)) {
    expect_close(bk.entry("u^n", "u^n")(x, y), k(ku, x, y) + 0.25 * dt * dt * k(kv, x, y));
  }
}

TEST(WaveBlocks, VelocityDiagonalAtZeroDistance) {
  const double gu = 1.3, wu = 4.0, gv = 0.7;
  const auto ku = KernelSpec::se1d(gu, wu), kv = KernelSpec::se1d(gv, 9.0);
  const double dt = 0.1;
  const auto bk = wave_trapezoidal_blocks(dt, ku, kv);
  const Point x{0.37, 0.0};
  expect_close(bk.entry("v^n", "v^n")(x, x), gv + 0.25 * dt * dt * 3.0 * gu * wu * wu);
}

TEST(WaveBlocks, PolynomialInTimeStep) {
  const auto ku = KernelSpec::se1d(1.0, 4.0), kv = KernelSpec::se1d(2.0, 9.0);
  const double steps[] = {0.0, 1e-3, 2e-3, 3e-3};
  for (const auto& [x, y] : random_pairs(3, 1, 13)) {
    Eigen::MatrixXd V(4, 3);
    Eigen::VectorXd f(4);
    for (int i = 0; i < 4; ++i) {
      const double s = steps[i] / 1e-3;
      V.row(i) << 1.0, s, s * s;
      f[i] = wave_trapezoidal_blocks(steps[i], ku, kv).entry("u^n", "u^n")(x, y);
    }
    const Eigen::Vector3d c = V.colPivHouseholderQr().solve(f);
    EXPECT_NEAR(c[0], k(ku, x, y), 1e-13);
    EXPECT_NEAR(c[1] / 1e-3, 0.0, 1e-9);
    EXPECT_NEAR(c[2] / 1e-6, 0.25 * k(kv, x, y), 1e-6);
  }
}

TEST(WaveBlocks, RequiresSquaredExponential) {
  EXPECT_THROW(wave_trapezoidal_blocks(0.1, KernelSpec::nn1d(1, 1), KernelSpec::se1d(1, 1)), InvalidArgument);
}

// ---------------------------------------------------------------- properties

TEST(SchemeProperties, AssembledMatricesFactor) {
  const auto se = KernelSpec::se1d(1.0, 10.0);
  expect_spd(lmm_blocks(LmmScheme::forward_euler(), DiffOp::d2(), {se}, 0.01), 1, 1);
  expect_spd(lmm_blocks(LmmScheme::backward_euler(), DiffOp::d2(), {se}, 0.01), 1, 2);
  expect_spd(lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {se}, 0.01), 1, 3);
  expect_spd(burgers_backward_euler_blocks([](const Point& x) { return -std::sin(std::numbers::pi * x[0]); },
                                           0.01 / std::numbers::pi, 0.01, KernelSpec::nn1d(1.0, 10.0)),
             1, 4, -1.0, 1.0);
  expect_spd(wave_trapezoidal_blocks(0.01, se, se), 1, 5);
  expect_spd(rk_blocks(ButcherTableau::gauss_legendre2(), DiffOp::d1(-1.0), {se, se, se}, 0.1), 1, 6);
  const auto se2 = KernelSpec::se2d(1.0, 5.0, 5.0);
  expect_spd(rk_blocks(ButcherTableau::rk_trapezoidal(), DiffOp::laplacian2d(), {se2, se2}, 0.01), 2, 7);
}

TEST(SchemeProperties, BlockSymmetry) {
  const auto se = KernelSpec::se1d(1.0, 10.0);
  expect_block_symmetry(lmm_blocks(LmmScheme::trapezoidal(), DiffOp::d2(), {se}, 0.01), 1, 20);
  expect_block_symmetry(burgers_backward_euler_blocks([](const Point& x) { return x[0] * x[0]; }, 0.01, 0.01,
                                                      KernelSpec::nn1d(1.0, 3.0)),
                        1, 21);
  expect_block_symmetry(wave_trapezoidal_blocks(0.05, se, KernelSpec::se1d(2.0, 3.0)), 1, 22);
  expect_block_symmetry(rk_blocks(ButcherTableau::gauss_legendre2(), DiffOp::d1(-1.0),
                                  {se, KernelSpec::se1d(2, 5), KernelSpec::se1d(0.5, 20)}, 0.1),
                        1, 23);
  const auto se2 = KernelSpec::se2d(1.0, 5.0, 3.0);
  expect_block_symmetry(rk_blocks(ButcherTableau::rk_trapezoidal(), DiffOp::laplacian2d(), {se2, se2}, 0.01), 2, 24);
}

// Both trapezoidal constructions advance the heat problem by one step from
// exact initial data; their predictions must agree.
TEST(SchemeProperties, TrapezoidalConstructionsAgreeOnHeat) {
  // Dirichlet edges only: a normal derivative of the LMM u^n label would need third derivatives
  auto p = make_problem(ProblemName::heat);
  std::erase_if(p.boundary, [](const BoundaryFunctional& b) { return b.kind != BoundaryKind::dirichlet; });
  const double dt = 0.01;
  const auto base = KernelSpec::se2d(1.0, 10.0, 10.0);
  std::mt19937_64 rng(5);
  std::vector<Point> xs;
  Eigen::VectorXd u0(40);
  for (int i = 0; i < 40; ++i) {
    xs.push_back(p.domain.sample(rng));
    u0[i] = analytic_solution(p, 0.0, xs.back());
  }
  const auto grid = error_grid(p.domain, 0, 12);

  auto solve = [&](BlockKernel bk, const std::vector<std::string>& boundary, const std::vector<std::string>& art,
                   const std::string& target) {
    const auto nz = bk.add_noise("noise", 1e-8, false);
    for (const auto& a : art) bk.set_label_noise(a, nz);
    TrainingSet d;
    d.blocks = boundary_rows(p, bk, boundary, nz);
    for (const auto& a : art) d.blocks.push_back({a, xs, u0, {}});
    const auto tr = train(bk, d, bk.params());
    const ConditionedGP gp(bk.with_params(tr.theta), d, d.targets());
    return gp.mean(target, grid);
  };
  const Eigen::VectorXd lmm =
      solve(lmm_blocks(LmmScheme::trapezoidal(), DiffOp::laplacian2d(), {base}, dt), {"u^n"}, {"u^{n-1}"}, "u^n");
  const Eigen::VectorXd rk = solve(rk_blocks(ButcherTableau::rk_trapezoidal(), DiffOp::laplacian2d(), {base, base}, dt),
                                   {"u^{n+1}", "u^n"}, {"u^n_3", "u^n_1"}, "u^{n+1}");
  EXPECT_LE((lmm - rk).norm() / rk.norm(), 5e-2);
  Eigen::VectorXd truth(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) truth[static_cast<Eigen::Index>(i)] = analytic_solution(p, dt, grid[i]);
  EXPECT_LE((rk - truth).norm() / truth.norm(), 5e-2);
}
