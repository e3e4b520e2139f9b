#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bsc/adaptive.hpp"
#include "bsc/bsc.hpp"
#include "bsc/fe_problem.hpp"
#include "bsc/krylov.hpp"
#include "bsc/problems.hpp"
#include "support.hpp"

using namespace bsc;
using namespace bsc::problems;

namespace {

// Central-difference check of F'(u) du; returns the worst relative V-norm error.
double fd_jacobian_error(const ResidualOperator& p, std::mt19937_64& rng, double u_scale,
                         int pairs = 20, double s = 1e-6) {
  const auto& sp = *p.space();
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const auto u = bsc::testing::random_state(sp, rng, u_scale);
    const auto du = bsc::testing::random_state(sp, rng, 1.0);
    DualVector fd = p.residual(u + s * du) - p.residual(u - s * du);
    fd *= 1.0 / (2.0 * s);
    const auto exact = p.jacobian_action(u, du);
    worst = std::max(worst, sp.v_norm(fd - exact) / sp.v_norm(exact));
  }
  return worst;
}

}  // namespace

TEST(Arctan, IncrementValues) {
  EXPECT_NEAR(arctan_increment(2.0), -5.535743588970452, 1e-12);
  EXPECT_NEAR(arctan_increment(2.0), -5.5357, 5e-5);
  EXPECT_EQ(arctan_residual(0.0), 0.0);
  EXPECT_EQ(arctan_increment(0.0), 0.0);
  // (1 + u^2) atan(u) at u = 0.6161, by a series for atan independent of std::atan
  const double u = 0.6161;
  double series = 0.0, pw = u;
  for (int k = 0; k < 200; ++k) {
    series += (k % 2 ? -1.0 : 1.0) * pw / (2 * k + 1);
    pw *= u * u;
  }
  EXPECT_NEAR(arctan_increment(u), -(1 + u * u) * series, 1e-14);
  EXPECT_NEAR(arctan_increment(u), -0.7618, 5e-5);
  ArctanProblem p;
  const auto inc = p.increment(p.point(2.0));
  EXPECT_EQ(inc.delta[0], arctan_increment(2.0));
}

TEST(Carrier, ResidualAtZero) {
  CarrierProblem p(1e-3, 101);
  const auto F = p.residual(p.space()->zero());
  const double h = p.grid().h();
  for (std::size_t i = 0; i < F.size(); ++i) EXPECT_DOUBLE_EQ(F[i], -h);
  EXPECT_GT(p.space()->v_norm(F), 0.0);
}

TEST(Carrier, ManufacturedQuadratic) {
  const double eps = 1e-3;
  CarrierProblem p(eps, 99);
  const auto& g = p.grid();
  std::vector<double> v(g.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - g.x(i) * g.x(i);
  const auto F = p.residual(g.make_state(v));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = 1.0 - g.x(i) * g.x(i);
    const double strong = eps * -2.0 + 2.0 * w * w + w * w - 1.0;
    // D2 is exact on quadratics, so only rounding separates the two
    EXPECT_NEAR(F[i] / g.h(), strong, 1e-9);
  }
}

TEST(Carrier, NoStencilLeakage) {
  CarrierProblem p(1e-2, 50);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto u = bsc::testing::random_state(*p.space(), rng);
  const auto F = p.residual(u);
  for (std::size_t j = 0; j < u.size(); ++j) {
    std::vector<double> w(u.coeffs().begin(), u.coeffs().end());
    w[j] += 3.0;
    const auto G = p.residual(p.space()->make_state(w));
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto dist = i > j ? i - j : j - i;
      if (dist > 1) EXPECT_EQ(G[i], F[i]);
    }
  }
}

TEST(Carrier, JacobianFiniteDifferences) {
  CarrierProblem p(1e-3, 255);
  std::mt19937_64 rng(bsc::testing::kSeed);
  EXPECT_LE(fd_jacobian_error(p, rng, 1.0), 1e-5);
  const auto u = bsc::testing::random_state(*p.space(), rng);
  EXPECT_EQ(p.space()->v_norm(p.jacobian_action(u, p.space()->zero())), 0.0);
}

TEST(Carrier, JacobianForwardDifferenceFirstOrder) {
  CarrierProblem p(1e-3, 127);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto& sp = *p.space();
  const auto u = bsc::testing::random_state(sp, rng);
  const auto du = bsc::testing::random_state(sp, rng);
  const auto J = p.jacobian_action(u, du);
  for (double s : {1e-4, 1e-5}) {
    DualVector fd = p.residual(u + s * du) - p.residual(u);
    fd *= 1.0 / s;
    // F is quadratic: the forward-difference error is exactly s * h * du^2
    std::vector<double> q(du.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = p.grid().h() * du[i] * du[i];
    EXPECT_LE(sp.v_norm(fd - J), 1.0001 * s * sp.v_norm(sp.make_dual(q)));
  }
}

TEST(Carrier, JacobianLinear) {
  CarrierProblem p(1e-2, 63);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto& sp = *p.space();
  const auto u = bsc::testing::random_state(sp, rng);
  const auto d1 = bsc::testing::random_state(sp, rng);
  const auto d2 = bsc::testing::random_state(sp, rng);
  const auto lhs = p.jacobian_action(u, 2.5 * d1 + -0.75 * d2);
  const auto rhs = 2.5 * p.jacobian_action(u, d1) + -0.75 * p.jacobian_action(u, d2);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
}

TEST(Carrier, DimensionMismatchThrows) {
  CarrierProblem p(1e-2, 63);
  auto other = UniformGridSpace::make(-1.0, 1.0, 31);
  EXPECT_THROW(p.residual(other->zero()), std::invalid_argument);
}

// Consistency order: converge on a grid, interpolate to h/2 and compare
// against the same quantity one level finer.
TEST(Carrier, HalfGridConsistency) {
  const double eps = 1e-2;
  auto run = [&](std::size_t n, const std::vector<double>& guess) {
    auto base = std::make_shared<CarrierProblem>(eps, n);
    krylov::KrylovConfig kc;
    kc.kappa = 1e-6;
    krylov::KrylovNewtonProblem prob(base, kc);
    BscConfig c;
    c.h_rel = 0.05;
    c.h_lo_factor = 0.05;
    c.residual_tol = 1e-11;
    c.max_iterations = 200;
    const auto u0 = guess.empty() ? base->space()->zero() : base->space()->make_state(guess);
    auto out = solve(prob, u0, c);
    EXPECT_EQ(out.status, SolveStatus::converged) << n;
    return std::vector<double>(out.final_state.coeffs().begin(), out.final_state.coeffs().end());
  };
  // cubic interpolation onto the nodes of the grid with twice the cells
  auto refine = [](const std::vector<double>& v) {
    std::vector<double> ext(v.size() + 2, 0.0);
    std::copy(v.begin(), v.end(), ext.begin() + 1);
    auto at = [&](long i) { return i < 0 || i >= static_cast<long>(ext.size()) ? 0.0 : ext[i]; };
    std::vector<double> fine;
    for (long i = 0; i + 1 < static_cast<long>(ext.size()); ++i) {
      if (i > 0) fine.push_back(ext[i]);
      const long last = static_cast<long>(ext.size()) - 1;
      double m = (-at(i - 1) + 9 * ext[i] + 9 * ext[i + 1] - at(i + 2)) / 16.0;
      if (i == 0) m = (5 * ext[0] + 15 * ext[1] - 5 * ext[2] + ext[3]) / 16.0;
      if (i + 1 == last) m = (5 * ext[last] + 15 * ext[last - 1] - 5 * ext[last - 2] + ext[last - 3]) / 16.0;
      fine.push_back(m);
    }
    return fine;
  };
  auto fine_residual = [&](const std::vector<double>& coarse) {
    const auto f = refine(coarse);
    CarrierProblem fp(eps, f.size());
    return fp.residual_norm(fp.space()->make_state(f));
  };
  const auto u1 = run(255, {});
  const auto u2 = run(511, refine(u1));
  const auto u3 = run(1023, refine(u2));
  const double r1 = fine_residual(u1), r2 = fine_residual(u2), r3 = fine_residual(u3);
  // second order: each halving divides the residual by about 4
  EXPECT_GT(r1 / r2, 3.5) << r1 << " " << r2;
  EXPECT_GT(r2 / r3, 3.5) << r2 << " " << r3;
  EXPECT_LE(r3, 4.0 * 1e-11 + 4.0 * r2 / 9.0);
}

TEST(MinSurfFlux, ZeroAndLimit) {
  const auto g0 = minsurf_flux(Vec2{0.0, 0.0});
  EXPECT_EQ(g0[0], 0.0);
  EXPECT_EQ(g0[1], 0.0);
  const auto j0 = minsurf_flux_jacobian(Vec2{0.0, 0.0});
  EXPECT_EQ(j0[0][0], 1.0);
  EXPECT_EQ(j0[1][1], 1.0);
  EXPECT_EQ(j0[0][1], 0.0);
  const auto big = minsurf_flux(Vec2{1e8, 0.0});
  EXPECT_GE(std::hypot(big[0], big[1]), 1.0 - 1e-15);
  EXPECT_LE(std::hypot(big[0], big[1]), 1.0);
}

TEST(MinSurfFlux, EigenvaluesAtThreeFour) {
  const auto j = minsurf_flux_jacobian(Vec2{3.0, 4.0});
  Eigen::Matrix2d m;
  m << j[0][0], j[0][1], j[1][0], j[1][1];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
  // 1 + |v|^2 = 26
  EXPECT_NEAR(es.eigenvalues()[0], std::pow(26.0, -1.5), 1e-15);
  EXPECT_NEAR(es.eigenvalues()[1], 1.0 / std::sqrt(26.0), 1e-15);
  // eigenvector of the small eigenvalue is along v
  const Eigen::Vector2d v = es.eigenvectors().col(0);
  EXPECT_NEAR(std::abs(v.dot(Eigen::Vector2d(0.6, 0.8))), 1.0, 1e-12);
}

TEST(MinSurfFlux, RandomBounds) {
  std::mt19937_64 rng(bsc::testing::kSeed);
  std::lognormal_distribution<double> mag(0.0, 3.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  for (int k = 0; k < 1000; ++k) {
    const double r = mag(rng), a = ang(rng);
    const Vec2 v{r * std::cos(a), r * std::sin(a)};
    const auto g = minsurf_flux(v);
    EXPECT_LE(std::hypot(g[0], g[1]), 1.0);
    const auto j = minsurf_flux_jacobian(v);
    EXPECT_DOUBLE_EQ(j[0][1], j[1][0]);
    Eigen::Matrix2d m;
    m << j[0][0], j[0][1], j[1][0], j[1][1];
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
    EXPECT_GT(ev[0], 0.0);
    EXPECT_LE(ev[1], 1.0 + 1e-15);
  }
}

TEST(MinSurfFlux, JacobianFiniteDifferences) {
  std::mt19937_64 rng(bsc::testing::kSeed);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  const double s = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec2 v{d(rng), d(rng)}, w{d(rng), d(rng)};
    const auto gp = minsurf_flux(Vec2{v[0] + s * w[0], v[1] + s * w[1]});
    const auto gm = minsurf_flux(Vec2{v[0] - s * w[0], v[1] - s * w[1]});
    const auto j = minsurf_flux_jacobian(v);
    const double ex0 = j[0][0] * w[0] + j[0][1] * w[1], ex1 = j[1][0] * w[0] + j[1][1] * w[1];
    const double e0 = (gp[0] - gm[0]) / (2 * s) - ex0, e1 = (gp[1] - gm[1]) / (2 * s) - ex1;
    worst = std::max(worst, std::hypot(e0, e1) / std::hypot(ex0, ex1));
    const double sd = (minsurf_flux(v[0] + s * w[0]) - minsurf_flux(v[0] - s * w[0])) / (2 * s);
    EXPECT_NEAR(sd, minsurf_flux_derivative(v[0]) * w[0], 1e-5 * std::abs(sd) + 1e-12);
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(FeForms, JacobianFiniteDifferences) {
  std::mt19937_64 rng(bsc::testing::kSeed);
  for (int p : {1, 2, 3}) {
    auto sp = FeSpace::make(Mesh1D::uniform(-1.0, 1.0, 24), p);
    FeProblem carrier(sp, std::make_shared<CarrierForm>(1e-2));
    EXPECT_LE(fd_jacobian_error(carrier, rng, 1.0), 1e-5) << p;
    auto sp01 = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 16), p);
    FeProblem minsurf(sp01, std::make_shared<MinSurfForm>(), 0.0, 1.0);
    EXPECT_LE(fd_jacobian_error(minsurf, rng, 0.5), 1e-5) << p;
  }
}

TEST(FeForms, FeCarrierAgreesWithFdAtZero) {
  // both discretize the same functional: F(0) phi = -integral of phi
  auto sp = FeSpace::make(Mesh1D::uniform(-1.0, 1.0, 64), 1);
  FeProblem fe(sp, std::make_shared<CarrierForm>(1e-2));
  const auto F = fe.residual(sp->zero());
  const double h = 2.0 / 64;
  for (std::size_t i = 0; i < F.size(); ++i) EXPECT_NEAR(F[i], -h, 1e-14);
}

TEST(MinSurf1D, LineIsExact) {
  for (int p : {1, 2}) {
    auto sp = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 8), p);
    auto prob = std::make_shared<FeProblem>(sp, std::make_shared<MinSurfForm>(), 0.3, 1.7);
    const auto line = prob->interpolate([](double x) { return 0.3 + 1.4 * x; });
    EXPECT_LE(prob->residual_norm(line), 1e-14);
  }
}

TEST(MinSurf1D, ConvergesToChord) {
  auto sp = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 8), 1);
  auto prob = std::make_shared<FeProblem>(sp, std::make_shared<MinSurfForm>(), 0.0, 1.0);
  auto provider = adaptive::increment_provider(prob, 1e-10);
  BscConfig c;
  c.H = 3.0;
  c.residual_tol = 1e-12;
  const auto out = solve(*provider, sp->zero(), c);
  ASSERT_EQ(out.status, SolveStatus::converged);
  EXPECT_LE(out.trace.size(), 6u);
  EXPECT_LE(out.final_residual_v, 1e-12);
  const auto full = prob->full_values(out.final_state);
  for (std::size_t i = 0; i < full.size(); ++i) {
    EXPECT_NEAR(full[i], sp->node_coordinate(i), 1e-10);
  }
}

// Residual decrease along the Carrier runs at the smaller step bounds. The
// H_rel = 0.01 run loses monotonicity near a nearly singular Jacobian.
class CarrierMonotone : public ::testing::TestWithParam<double> {};

TEST_P(CarrierMonotone, ResidualDecreases) {
  auto base = std::make_shared<CarrierProblem>(1e-3, 2047);
  krylov::KrylovNewtonProblem prob(base, krylov::KrylovConfig{});
  BscConfig c;
  c.h_rel = GetParam();
  c.h_lo_factor = 0.05;
  c.max_iterations = 200;
  const auto out = solve(prob, base->space()->zero(), c);
  ASSERT_EQ(out.status, SolveStatus::converged);
  for (std::size_t k = 0; k + 1 < out.trace.size(); ++k) {
    EXPECT_LT(out.trace[k + 1].residual_v, out.trace[k].residual_v) << "k=" << k;
  }
  EXPECT_LT(out.final_residual_v, out.trace.back().residual_v);
}

INSTANTIATE_TEST_SUITE_P(HRel, CarrierMonotone, ::testing::Values(0.05, 0.01),
                         [](const auto& info) { return info.param == 0.05 ? "h005" : "h001"; });
