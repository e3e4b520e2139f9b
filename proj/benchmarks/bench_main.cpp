#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "bsc/adaptive.hpp"
#include "bsc/bsc.hpp"
#include "bsc/krylov.hpp"
#include "bsc/problems.hpp"

using namespace bsc;

namespace {

void BM_ArctanDemo(benchmark::State& state) {
  problems::ArctanProblem atan;
  BscConfig cfg;
  cfg.residual_tol = 1e-15;
  const auto u0 = atan.point(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve(atan, u0, cfg).final_residual_v);
}
BENCHMARK(BM_ArctanDemo);

void BM_RieszSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto g = UniformGridSpace::make(-1.0, 1.0, n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::sin(std::numbers::pi * g->x(i));
  const auto v = g->to_dual(g->make_state(std::move(s)));
  for (auto _ : state) benchmark::DoNotOptimize(g->v_norm(v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RieszSolve)->RangeMultiplier(4)->Range(511, 32767)->Complexity(benchmark::oN);

void BM_GmresCarrier(benchmark::State& state) {
  problems::CarrierProblem p(1e-3, static_cast<std::size_t>(state.range(0)));
  const auto u = p.space()->zero();
  const auto rhs = -p.residual(u);
  const auto op = krylov::riesz_preconditioned(p.space(), [&](const StateVector& d) {
    return p.jacobian_action(u, d);
  });
  krylov::KrylovConfig kc;
  kc.kappa = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(krylov::gmres(op, rhs, kc).iterations);
}
BENCHMARK(BM_GmresCarrier)->Arg(255)->Arg(1023)->Arg(2047)->Unit(benchmark::kMillisecond);

void BM_CarrierSolve(benchmark::State& state) {
  auto carrier = std::make_shared<problems::CarrierProblem>(1e-3, 2047);
  krylov::KrylovNewtonProblem prob(carrier, krylov::KrylovConfig{});
  BscConfig cfg;
  cfg.h_rel = 0.05;
  cfg.h_lo_factor = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(solve(prob, carrier->space()->zero(), cfg).trace.size());
}
BENCHMARK(BM_CarrierSolve)->Unit(benchmark::kMillisecond);

void BM_KappaEstimate(benchmark::State& state) {
  auto sp = FeSpace::make(Mesh1D::uniform(-1.0, 1.0, static_cast<std::size_t>(state.range(0))), 1);
  auto prob = std::make_shared<problems::FeProblem>(sp, std::make_shared<problems::CarrierForm>(1e-2));
  const auto u = sp->zero();
  const auto du = adaptive::increment_provider(prob, 1e-3)->increment(u).delta;
  const auto enriched = adaptive::enriched_space(*sp);
  for (auto _ : state) benchmark::DoNotOptimize(adaptive::estimate_kappa(*prob, enriched, u, du).kappa_k);
}
BENCHMARK(BM_KappaEstimate)->Arg(64)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
