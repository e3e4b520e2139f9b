#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bsc/adaptive.hpp"
#include "support.hpp"

using namespace bsc;
using namespace bsc::adaptive;
using bsc::problems::CarrierForm;
using bsc::problems::MinSurfForm;
using bsc::problems::PoissonForm;

namespace {

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

std::shared_ptr<FeProblem> carrier(std::size_t cells, int p = 1, double eps = 1e-2) {
  return std::make_shared<FeProblem>(FeSpace::make(Mesh1D::uniform(-1.0, 1.0, cells), p),
                                     std::make_shared<CarrierForm>(eps));
}

AdaptiveConfig carrier_config() {
  AdaptiveConfig c;
  c.bsc.h_rel = 0.1;
  c.bsc.h_lo_factor = 0.05;
  c.bsc.max_iterations = 200;
  c.increment_kappa = 1e-3;
  return c;
}

// Phase-1 iterate of the Carrier problem: a state with a sizeable residual.
StateVector phase1_state(const std::shared_ptr<FeProblem>& prob) {
  auto provider = increment_provider(prob, 1e-3);
  BscConfig b = carrier_config().bsc;
  b.increment_tol = 0.01;
  return solve(*provider, prob->fe_space()->zero(), b).final_state;
}

StateVector exact_increment(const FeProblem& prob, const StateVector& u) {
  const auto sys = assemble_increment_system(prob, u);
  const auto& sp = *prob.space();
  const auto a = bsc::testing::dense_of(sp.dim(), [&](const std::vector<double>& e) {
    return as_vec(sys.apply(sp.make_state(e)).coeffs());
  });
  return sp.make_state(bsc::testing::from_eigen(
      a.partialPivLu().solve(bsc::testing::to_eigen(as_vec(sys.rhs.coeffs())))));
}

}  // namespace

TEST(IncrementSystem, PoissonOneStep) {
  auto sp = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 10), 1);
  auto prob = std::make_shared<FeProblem>(sp, std::make_shared<PoissonForm>(1.0));
  auto provider = increment_provider(prob, 1e-12);
  BscConfig c;
  c.H = 1e6;
  c.residual_tol = 1e-12;
  const auto out = solve(*provider, sp->zero(), c);
  ASSERT_EQ(out.status, SolveStatus::converged);
  EXPECT_EQ(out.trace.size(), 1u);
  // linear elements are nodally exact for -u'' = 1 in 1-D
  for (std::size_t i = 0; i < sp->dim(); ++i) {
    const double x = sp->node_coordinate(i + 1);
    EXPECT_NEAR(out.final_state[i], 0.5 * x * (1.0 - x), 1e-12);
  }
}

TEST(IncrementSystem, CarrierMatchesDenseAssembly) {
  const double eps = 1e-2;
  auto prob = carrier(16, 1, eps);
  const auto& sp = *prob->fe_space();
  ASSERT_EQ(sp.dim(), 15u);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto u = bsc::testing::random_state(sp, rng);
  const auto sys = assemble_increment_system(*prob, u);
  const auto J = bsc::testing::dense_of(15, [&](const std::vector<double>& e) {
    return as_vec(sys.apply(sp.make_state(e)).coeffs());
  });

  // hand assembly with hats and a 5-point Gauss-Legendre rule
  const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                        0.9061798459386640};
  const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                        0.4786286704993665, 0.2369268850561891};
  const double h = 2.0 / 16;
  std::vector<double> full(17, 0.0);
  for (std::size_t i = 0; i < 15; ++i) full[i + 1] = u[i];
  Eigen::MatrixXd Jo = Eigen::MatrixXd::Zero(17, 17);
  Eigen::VectorXd Fo = Eigen::VectorXd::Zero(17);
  for (int c = 0; c < 16; ++c) {
    const double x0 = -1.0 + c * h;
    for (int q = 0; q < 5; ++q) {
      const double xi = 0.5 * (gx[q] + 1.0), w = 0.5 * h * gw[q], x = x0 + xi * h;
      const double phi[2] = {1.0 - xi, xi}, dphi[2] = {-1.0 / h, 1.0 / h};
      const double uq = full[c] * phi[0] + full[c + 1] * phi[1];
      const double dq = full[c] * dphi[0] + full[c + 1] * dphi[1];
      for (int a = 0; a < 2; ++a) {
        Fo[c + a] += w * (-eps * dq * dphi[a] + (2 * (1 - x * x) * uq + uq * uq - 1) * phi[a]);
        for (int b = 0; b < 2; ++b) {
          Jo(c + a, c + b) += w * (-eps * dphi[b] * dphi[a] + (2 * (1 - x * x) + 2 * uq) * phi[b] * phi[a]);
        }
      }
    }
  }
  for (int i = 0; i < 15; ++i) {
    EXPECT_NEAR(sys.rhs[i], -Fo[i + 1], 1e-12);
    for (int j = 0; j < 15; ++j) EXPECT_NEAR(J(i, j), Jo(i + 1, j + 1), 1e-12) << i << "," << j;
  }
}

TEST(IncrementSystem, MinimalMesh) {
  auto prob = carrier(2);
  ASSERT_EQ(prob->space()->dim(), 1u);
  const auto u = prob->space()->zero();
  const auto du = exact_increment(*prob, u);
  const auto lin = prob->residual(u) + prob->jacobian_action(u, du);
  EXPECT_NEAR(lin[0], 0.0, 1e-14);
  auto provider = increment_provider(prob, 1e-6);
  EXPECT_NEAR(provider->increment(u).delta[0], du[0], 1e-12);
}

TEST(EstimateKappa, ZeroForExactEnrichedSolve) {
  auto prob = carrier(16);
  auto enriched = enriched_space(*prob->fe_space());
  auto on_enriched = prob->on_space(enriched);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto u = bsc::testing::random_state(*enriched, rng, 0.5);
  const auto du = exact_increment(*on_enriched, u);
  KappaOptions o;
  o.mode = RieszSolve::direct;
  const auto est = estimate_kappa(*on_enriched, enriched, u, du, o);
  EXPECT_LE(est.kappa_k, 1e-10);
  // the degenerate case the enrichment exists for: same space gives zero too
  const auto same = estimate_kappa(*prob, prob->fe_space(), prob->space()->zero(),
                                   exact_increment(*prob, prob->space()->zero()), o);
  EXPECT_LE(same.kappa_k, 1e-10);
  const auto real = estimate_kappa(*prob, prob->space()->zero(),
                                   exact_increment(*prob, prob->space()->zero()), o);
  EXPECT_GT(real.kappa_k, 1e-3);
}

TEST(EstimateKappa, ContributionsMatchGlobalNorm) {
  auto prob = carrier(20, 1);
  std::mt19937_64 rng(bsc::testing::kSeed);
  const auto u = bsc::testing::random_state(*prob->space(), rng, 0.5);
  const auto du = bsc::testing::random_state(*prob->space(), rng, 0.5);
  auto enriched = enriched_space(*prob->fe_space());
  KappaOptions o;
  o.mode = RieszSolve::direct;
  const auto est = estimate_kappa(*prob, enriched, u, du, o);
  // oracle: dense V-norms of the lifted functionals on the enriched space
  auto fine = prob->on_space(enriched);
  const auto ue = transfer_solution(u, *prob->fe_space(), *enriched);
  const auto due = transfer_solution(du, *prob->fe_space(), *enriched);
  const auto Fe = fine->residual(ue);
  const auto Ne = Fe + fine->jacobian_action(ue, due);
  const double num = bsc::testing::dense_v_norm(*enriched, Ne.coeffs());
  const double den = bsc::testing::dense_v_norm(*enriched, Fe.coeffs());
  EXPECT_NEAR(est.numerator_v, num, 1e-10 * num);
  EXPECT_NEAR(est.denominator_v, den, 1e-10 * den);
  EXPECT_NEAR(est.kappa_k, num / den, 1e-10);
  ASSERT_EQ(est.cell_contributions.size(), 20u);
  double sum = 0.0;
  for (double c : est.cell_contributions) {
    EXPECT_GE(c, 0.0);
    sum += c;
  }
  EXPECT_NEAR(sum, num * num, 1e-10 * num * num);
}

TEST(EstimateKappa, CgAgreesWithDirect) {
  for (std::size_t cells : {32u, 64u, 128u}) {
    auto prob = carrier(cells);
    const auto u = phase1_state(prob);
    const auto du = increment_provider(prob, 1e-3)->increment(u).delta;
    KappaOptions direct;
    direct.mode = RieszSolve::direct;
    const auto a = estimate_kappa(*prob, u, du, direct);
    const auto b = estimate_kappa(*prob, u, du);
    EXPECT_LE(std::abs(a.kappa_k - b.kappa_k), 0.15 * a.kappa_k) << cells;
    EXPECT_GT(b.numerator_iterations, 0);
  }
}

TEST(EstimateKappa, ZeroResidualIsConverged) {
  auto sp = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 8), 1);
  FeProblem prob(sp, std::make_shared<MinSurfForm>(), 0.0, 0.0);
  const auto est = estimate_kappa(prob, sp->zero(), sp->zero());
  EXPECT_TRUE(est.converged);
  EXPECT_EQ(est.kappa_k, 0.0);
}

TEST(MarkAndRefine, EqualContributions) {
  const auto mesh = Mesh1D::uniform(0.0, 1.0, 6);
  RefinementPolicy pol;
  const std::vector<double> c(6, 2.0);
  const auto r = mark_and_refine(mesh, c, pol);
  EXPECT_EQ(r.refined.size(), 6u);
  EXPECT_EQ(r.mesh.n_cells(), 12u);
  EXPECT_FALSE(r.saturated);
  EXPECT_TRUE(r.mesh.refines(mesh));
}

TEST(MarkAndRefine, DominantCell) {
  const auto mesh = Mesh1D::uniform(0.0, 1.0, 6);
  for (double p : {1.0, 2.0}) {
    RefinementPolicy pol;
    pol.mark_exponent = p;
    std::vector<double> c(6, 1.0);
    c[3] = std::pow(2.0, p) * 1.01;
    const auto r = mark_and_refine(mesh, c, pol);
    ASSERT_EQ(r.refined.size(), 1u);
    EXPECT_EQ(r.refined[0], 3u);
    EXPECT_EQ(r.mesh.n_cells(), 7u);
    // exactly at the threshold is not marked
    c[3] = std::pow(2.0, p);
    EXPECT_EQ(mark_and_refine(mesh, c, pol).refined.size(), 1u);
  }
}

TEST(MarkAndRefine, CapKeepsLargest) {
  const auto mesh = Mesh1D::uniform(0.0, 1.0, 10);
  RefinementPolicy pol;
  pol.max_cells = 14;
  const std::vector<double> c{0.1, 9, 6, 0.2, 8, 7, 5, 4, 3, 10};
  // 8 cells exceed half the maximum; only 4 may be split
  const auto r = mark_and_refine(mesh, c, pol);
  auto got = r.refined;
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (std::vector<std::size_t>{1, 4, 5, 9}));
  EXPECT_EQ(r.mesh.n_cells(), 14u);
  EXPECT_TRUE(mark_and_refine(r.mesh, std::vector<double>(14, 1.0), pol).saturated);
  const auto mesh0 = mesh;
  EXPECT_EQ(mesh, mesh0);
}

TEST(MarkAndRefine, SaturatedAtCap) {
  const auto mesh = Mesh1D::uniform(0.0, 1.0, 10);
  RefinementPolicy pol;
  pol.max_cells = 10;
  const auto r = mark_and_refine(mesh, std::vector<double>(10, 1.0), pol);
  EXPECT_TRUE(r.saturated);
  EXPECT_TRUE(r.refined.empty());
  EXPECT_EQ(r.mesh, mesh);
}

TEST(Transfer, Constant) {
  auto from = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 4), 2);
  const auto coarse_mesh = from->mesh();
  const std::vector<std::size_t> cells{0, 2, 3};
  auto to = FeSpace::make(coarse_mesh.bisect(cells).bisect(std::vector<std::size_t>{1}), 3);
  const auto u = from->make_state(std::vector<double>(from->dim(), 2.5));
  const auto v = transfer_solution(u, *from, *to, 2.5, 2.5);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(v[i], 2.5);
}

TEST(Transfer, Hat) {
  auto from = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 2), 1);
  auto to = FeSpace::make(from->mesh().bisect(std::vector<std::size_t>{0, 1}), 1);
  const auto u = from->make_state({1.0});
  const auto v = transfer_solution(u, *from, *to);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(v[2], 0.5);
  EXPECT_NEAR(std::abs(to->u_norm(v) - from->u_norm(u)), 0.0, 1e-12);
}

TEST(Transfer, RandomQuadraticsPointwise) {
  std::mt19937_64 rng(bsc::testing::kSeed);
  auto from = FeSpace::make(Mesh1D::uniform(-1.0, 1.0, 7), 2);
  auto to = FeSpace::make(from->mesh().bisect(std::vector<std::size_t>{1, 4, 5}), 2);
  const auto u = bsc::testing::random_state(*from, rng);
  const auto v = transfer_solution(u, *from, *to, 0.3, -0.2);
  const auto fu = from->expand(u.coeffs(), 0.3, -0.2);
  const auto fv = to->expand(v.coeffs(), 0.3, -0.2);
  std::uniform_real_distribution<double> x(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double s = x(rng);
    EXPECT_NEAR(to->evaluate(fv, s), from->evaluate(fu, s), 1e-12);
  }
}

TEST(Transfer, NonNestedThrows) {
  auto from = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 3), 1);
  auto to = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 4), 1);
  EXPECT_THROW(transfer_solution(from->zero(), *from, *to), std::invalid_argument);
}

TEST(AdaptiveSolve, MinSurfNeedsNoRefinement) {
  auto sp = FeSpace::make(Mesh1D::uniform(0.0, 1.0, 8), 1);
  auto prob = std::make_shared<FeProblem>(sp, std::make_shared<MinSurfForm>(), 0.0, 1.0);
  AdaptiveConfig c;
  c.bsc.H = 3.0;
  c.bsc.residual_tol = 1e-12;
  c.increment_kappa = 1e-10;
  const auto res = adaptive_solve(prob, sp->zero(), c);
  EXPECT_EQ(res.outcome.status, SolveStatus::converged);
  EXPECT_EQ(res.final_problem->fe_space()->mesh().n_cells(), 8u);
  for (const auto& t : res.trials) EXPECT_TRUE(t.accepted);
  // the chord lies in every FE space, so the enriched residual vanishes there
  KappaOptions o;
  o.mode = RieszSolve::direct;
  const auto chord = prob->interpolate([](double x) { return x; });
  EXPECT_LE(estimate_kappa(*prob, chord, sp->zero(), o).denominator_v, 1e-14);
}

TEST(AdaptiveSolve, CarrierDichotomyAndGrowth) {
  auto prob = carrier(32);
  const auto cfg = carrier_config();
  const auto res = adaptive_solve(prob, prob->space()->zero(), cfg);
  EXPECT_TRUE(res.outcome.status == SolveStatus::converged ||
              res.outcome.status == SolveStatus::saturated);
  ASSERT_GE(res.history.size(), 2u);
  int discarded = 0;
  for (const auto& t : res.trials) {
    if (t.accepted) {
      EXPECT_LE(t.kappa, cfg.policy.kappa_target);
    } else {
      EXPECT_GT(t.kappa, cfg.policy.kappa_target);
      ++discarded;
    }
  }
  EXPECT_GT(discarded, 0);
  for (std::size_t k = 1; k < res.history.size(); ++k) {
    EXPECT_GT(res.history[k].dofs, res.history[k - 1].dofs);
    EXPECT_GT(res.history[k].cells, res.history[k - 1].cells);
  }
  for (const auto& h : res.history) {
    for (double d : h.kappa_trials) EXPECT_GT(d, cfg.policy.kappa_target);
    if (h.kappa_accepted) EXPECT_LE(*h.kappa_accepted, cfg.policy.kappa_target);
  }
  EXPECT_LE(res.final_problem->fe_space()->mesh().n_cells(), cfg.policy.max_cells);

  const auto finals = per_mesh_final_residuals(res.history);
  ASSERT_GE(finals.size(), 3u);
  for (std::size_t k = 1; k < finals.size(); ++k) EXPECT_LT(finals[k], finals[k - 1]) << k;
}

TEST(AdaptiveSolve, CapAtInitialCountIsFixedMesh) {
  auto prob = carrier(32);
  auto cfg = carrier_config();
  cfg.policy.max_cells = 32;
  const auto res = adaptive_solve(prob, prob->space()->zero(), cfg);
  EXPECT_EQ(res.outcome.status, SolveStatus::saturated);
  EXPECT_EQ(res.final_problem->fe_space()->mesh().n_cells(), 32u);
  ASSERT_FALSE(res.trials.empty());
  EXPECT_GT(res.trials.back().kappa, cfg.policy.kappa_target);
  EXPECT_FALSE(res.trials.back().accepted);
}

TEST(AdaptiveSolve, RefinementDoesNotRaiseKappa) {
  KappaOptions direct;
  direct.mode = RieszSolve::direct;
  RefinementPolicy pol;
  for (std::size_t cells : {16u, 32u, 64u}) {
    auto prob = carrier(cells);
    const auto u = phase1_state(prob);
    const auto du = increment_provider(prob, 1e-3)->increment(u).delta;
    const auto old_est = estimate_kappa(*prob, u, du, direct);
    const auto r = mark_and_refine(prob->fe_space()->mesh(), old_est, pol);
    auto fine = prob->on_space(FeSpace::make(r.mesh, 1));
    const auto uf = transfer_solution(u, *prob->fe_space(), *fine->fe_space());
    const auto duf = increment_provider(fine, 1e-3)->increment(uf).delta;
    const auto new_est = estimate_kappa(*fine, uf, duf, direct);
    EXPECT_LE(new_est.kappa_k, old_est.kappa_k + 0.05) << cells;
  }
}

TEST(AdaptiveSolve, FrozenMeshKappaApproachesOne) {
  auto prob = carrier(32);
  auto cfg = carrier_config();
  cfg.continue_on_saturation = true;
  cfg.policy.max_cells = 32;
  cfg.phase1_increment_tol = 1.0;
  const auto res = adaptive_solve(prob, prob->space()->zero(), cfg);
  std::vector<double> discarded;
  for (const auto& t : res.trials)
    if (!t.accepted) discarded.push_back(t.kappa);
  ASSERT_GE(discarded.size(), 2u);
  for (std::size_t k = 1; k < discarded.size(); ++k) EXPECT_GE(discarded[k], discarded[k - 1]);
  EXPECT_GE(discarded.back(), 0.9);
}

TEST(AdaptiveConfig, Validation) {
  AdaptiveConfig c;
  c.policy.kappa_target = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdaptiveConfig{};
  c.policy.max_cells = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdaptiveConfig{};
  c.phase1_increment_tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
