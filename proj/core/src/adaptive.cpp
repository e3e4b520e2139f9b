#include "bsc/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bsc::adaptive {

IncrementSystem assemble_increment_system(const FeProblem& problem, const StateVector& u) {
  problem.fe_space()->require_member(u, "assemble_increment_system");
  DualVector rhs = problem.residual(u);
  rhs *= -1.0;
  return {[&problem, u](const StateVector& du) { return problem.jacobian_action(u, du); },
          std::move(rhs)};
}

std::shared_ptr<krylov::KrylovNewtonProblem> increment_provider(
    std::shared_ptr<const FeProblem> problem, double kappa, int max_iters) {
  krylov::KrylovConfig kc;
  kc.kappa = kappa;
  kc.max_iters = max_iters;
  const auto method = problem->jacobian_is_spd() ? krylov::Method::cg : krylov::Method::gmres;
  return std::make_shared<krylov::KrylovNewtonProblem>(std::move(problem), kc, method);
}

StateVector transfer_solution(const StateVector& u, const FeSpace& from, const FeSpace& to,
                              double left_value, double right_value) {
  from.require_member(u, "transfer_solution");
  if (to.degree() < from.degree() || !to.mesh().refines(from.mesh())) {
    throw std::invalid_argument("transfer_solution: target space does not contain the source space");
  }
  const auto full = from.expand(u.coeffs(), left_value, right_value);
  std::vector<double> out(to.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = from.evaluate(full, to.node_coordinate(i + 1));
  }
  return to.make_state(std::move(out));
}

std::shared_ptr<const FeSpace> enriched_space(const FeSpace& space) {
  return FeSpace::make(space.mesh(), space.degree() + 1);
}

namespace {

struct RieszSolution {
  StateVector r;
  int iterations = 0;
};

RieszSolution riesz_solve(const FeSpace& space, const DualVector& v, double tol,
                          const KappaOptions& options) {
  if (options.mode == RieszSolve::direct) {
    return {space.riesz(v), 0};
  }
  const auto diag = space.inner_operator_diagonal();
  krylov::LinearOperatorSpec op;
  op.apply = [&space](const StateVector& x) {
    return space.make_dual(space.apply_inner_operator(x.coeffs()));
  };
  op.precondition = [&space, &diag](const DualVector& d) {
    std::vector<double> z(d.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = d[i] / diag[i];
    }
    return space.make_state(std::move(z));
  };
  op.inner = [&space](const StateVector& a, const StateVector& b) { return space.inner(a, b); };
  krylov::KrylovConfig kc;
  kc.kappa = tol;
  kc.max_iters = options.max_iters;
  auto res = krylov::cg(op, v, kc);
  return {std::move(res.increment), res.iterations};
}

}  // namespace

KappaEstimate estimate_kappa(const FeProblem& problem, std::shared_ptr<const FeSpace> enriched,
                             const StateVector& u, const StateVector& du,
                             const KappaOptions& options) {
  const FeSpace& base = *problem.fe_space();
  // equal degree is allowed but yields the degenerate kappa_k = 0 for Galerkin increments
  if (!(enriched->mesh() == base.mesh()) || enriched->degree() < base.degree()) {
    throw std::invalid_argument("estimate_kappa: test space must share the mesh and not lower the degree");
  }
  const auto fine = problem.on_space(enriched);
  const StateVector uf = transfer_solution(u, base, *enriched, problem.left_value(),
                                           problem.right_value());
  const StateVector duf = transfer_solution(du, base, *enriched);

  const DualVector f = fine->residual(uf);
  DualVector lin = f;
  lin += fine->jacobian_action(uf, duf);

  KappaEstimate est;
  const auto den = riesz_solve(*enriched, f, options.denominator_tol, options);
  est.denominator_v = enriched->u_norm(den.r);
  est.denominator_iterations = den.iterations;
  est.cell_contributions.assign(enriched->mesh().n_cells(), 0.0);
  if (!(est.denominator_v > 0.0)) {
    est.converged = true;
    return est;
  }
  const auto num = riesz_solve(*enriched, lin, options.numerator_tol, options);
  est.numerator_iterations = num.iterations;
  est.cell_contributions = enriched->cell_energy(num.r.coeffs());
  const double sq = std::accumulate(est.cell_contributions.begin(), est.cell_contributions.end(), 0.0);
  est.numerator_v = std::sqrt(sq);
  est.kappa_k = est.numerator_v / est.denominator_v;
  return est;
}

KappaEstimate estimate_kappa(const FeProblem& problem, const StateVector& u, const StateVector& du,
                             const KappaOptions& options) {
  return estimate_kappa(problem, enriched_space(*problem.fe_space()), u, du, options);
}

void RefinementPolicy::validate() const {
  if (!(kappa_target > 0.0 && kappa_target < 1.0)) {
    throw std::invalid_argument("RefinementPolicy.kappa_target: must lie in (0, 1)");
  }
  if (!(mark_exponent >= 0.0) || !std::isfinite(mark_exponent)) {
    throw std::invalid_argument("RefinementPolicy.mark_exponent: must be finite and >= 0");
  }
  if (max_cells < 1) {
    throw std::invalid_argument("RefinementPolicy.max_cells: must be >= 1");
  }
}

RefineResult mark_and_refine(const Mesh1D& mesh, std::span<const double> contributions,
                             const RefinementPolicy& policy) {
  policy.validate();
  if (contributions.size() != mesh.n_cells()) {
    throw std::invalid_argument("mark_and_refine: one contribution per cell required");
  }
  RefineResult result{mesh, {}, false};
  if (mesh.n_cells() >= policy.max_cells) {
    result.saturated = true;
    return result;
  }
  const double top = *std::max_element(contributions.begin(), contributions.end());
  const double threshold = std::exp2(-policy.mark_exponent) * top;
  std::vector<std::size_t> marked;
  for (std::size_t c = 0; c < contributions.size(); ++c) {
    if (contributions[c] > threshold) {
      marked.push_back(c);
    }
  }
  const std::size_t room = policy.max_cells - mesh.n_cells();
  if (marked.size() > room) {
    std::stable_sort(marked.begin(), marked.end(), [&](std::size_t a, std::size_t b) {
      return contributions[a] > contributions[b];
    });
    marked.resize(room);
    std::sort(marked.begin(), marked.end());
  }
  if (marked.empty()) {
    result.saturated = true;
    return result;
  }
  result.mesh = mesh.bisect(marked);
  result.refined = std::move(marked);
  return result;
}

RefineResult mark_and_refine(const Mesh1D& mesh, const KappaEstimate& estimate,
                             const RefinementPolicy& policy) {
  return mark_and_refine(mesh, estimate.cell_contributions, policy);
}

void AdaptiveConfig::validate() const {
  bsc.validate();
  policy.validate();
  if (!(phase1_increment_tol > 0.0)) {
    throw std::invalid_argument("AdaptiveConfig.phase1_increment_tol: must be positive");
  }
  if (!(increment_kappa > 0.0 && increment_kappa < 1.0)) {
    throw std::invalid_argument("AdaptiveConfig.increment_kappa: must lie in (0, 1)");
  }
  if (!(kappa.numerator_tol > 0.0 && kappa.numerator_tol < 1.0) ||
      !(kappa.denominator_tol > 0.0 && kappa.denominator_tol < 1.0)) {
    throw std::invalid_argument("AdaptiveConfig.kappa: CG tolerances must lie in (0, 1)");
  }
  if (!(saturated_increment_tol > 0.0)) {
    throw std::invalid_argument("AdaptiveConfig.saturated_increment_tol: must be positive");
  }
}

AdaptiveOutcome adaptive_solve(std::shared_ptr<const FeProblem> problem, const StateVector& u0,
                               const AdaptiveConfig& config) {
  config.validate();
  if (problem->fe_space()->mesh().n_cells() > config.policy.max_cells) {
    throw std::invalid_argument("RefinementPolicy.max_cells: below the initial cell count");
  }
  auto provider = increment_provider(problem, config.increment_kappa);
  BscConfig phase1 = config.bsc;
  phase1.increment_tol = config.phase1_increment_tol;
  AdaptiveOutcome res{solve(*provider, u0, phase1), problem, 0, {}, {}};
  res.phase1_iterations = static_cast<int>(res.outcome.trace.size());
  for (auto& rec : res.outcome.trace) {
    rec.kappa_k.reset();
  }
  SolveOutcome& out = res.outcome;
  if (out.status != SolveStatus::converged || out.final_residual_v <= phase1.residual_tol) {
    return res;
  }

  BscConfig cfg = config.bsc;
  cfg.H = out.H;
  cfg.h_rel.reset();
  StepControlState control;
  if (!out.trace.empty()) {
    control.last_t = out.trace.back().t;
    control.last_h_prime = out.trace.back().h_prime;
  }

  auto space = problem->fe_space();
  auto enriched = enriched_space(*space);
  StateVector u = out.final_state;
  std::optional<Increment> pending;
  bool frozen = false;

  auto finish = [&](SolveStatus status, std::string msg) {
    out.status = status;
    out.message = std::move(msg);
    out.final_state = u;
    res.final_problem = problem;
    return res;
  };

  for (int k = res.phase1_iterations;; ++k) {
    MeshHistoryEntry entry;
    entry.iteration = k;
    std::optional<Increment> inc;
    KappaEstimate est;
    for (;;) {
      try {
        inc = pending ? std::move(*pending) : provider->increment(u);
        ++out.increment_evaluations;
      } catch (const OperatorFailure& e) {
        return finish(SolveStatus::operator_failure, e.what());
      } catch (const std::domain_error& e) {
        return finish(SolveStatus::operator_failure, e.what());
      }
      pending.reset();
      est = estimate_kappa(*problem, enriched, u, inc->delta, config.kappa);
      entry.cells = space->mesh().n_cells();
      entry.dofs = space->dim();
      KappaTrial trial{k, entry.cells, entry.dofs, est.kappa_k, est.denominator_v, false};
      out.final_residual_v = est.denominator_v;
      out.final_increment_u = space->u_norm(inc->delta);

      if (est.converged || est.denominator_v <= cfg.residual_tol) {
        trial.accepted = true;
        res.trials.push_back(trial);
        entry.kappa_accepted = est.kappa_k;
        entry.residual_v = est.denominator_v;
        res.history.push_back(entry);
        return finish(SolveStatus::converged, {});
      }
      if (est.kappa_k <= config.policy.kappa_target) {
        trial.accepted = true;
        res.trials.push_back(trial);
        entry.kappa_accepted = est.kappa_k;
        break;
      }
      res.trials.push_back(trial);
      entry.kappa_trials.push_back(est.kappa_k);
      if (frozen) {
        break;
      }
      RefineResult rr = mark_and_refine(space->mesh(), est, config.policy);
      if (rr.saturated) {
        if (!config.continue_on_saturation) {
          entry.residual_v = est.denominator_v;
          res.history.push_back(entry);
          std::ostringstream os;
          os << "cell cap " << config.policy.max_cells << " reached with kappa_k = " << est.kappa_k;
          return finish(SolveStatus::saturated, os.str());
        }
        frozen = true;
        break;
      }
      auto next = FeSpace::make(std::move(rr.mesh), space->degree());
      u = transfer_solution(u, *space, *next, problem->left_value(), problem->right_value());
      problem = problem->on_space(next);
      provider = increment_provider(problem, config.increment_kappa);
      space = next;
      enriched = enriched_space(*space);
    }
    entry.residual_v = est.denominator_v;
    res.history.push_back(entry);

    if (frozen && out.final_increment_u <= config.saturated_increment_tol) {
      std::ostringstream os;
      os << "frozen mesh at the cell cap; final kappa_k = " << est.kappa_k;
      return finish(SolveStatus::saturated, os.str());
    }
    if (k >= cfg.max_iterations) {
      return finish(SolveStatus::max_iterations, {});
    }

    std::optional<StepSelection> sel;
    try {
      sel = select_step_size(*provider, u, *inc, cfg, predict_step(cfg, control));
    } catch (const OperatorFailure& e) {
      return finish(SolveStatus::operator_failure, e.what());
    } catch (const std::domain_error& e) {
      return finish(SolveStatus::operator_failure, e.what());
    }
    out.increment_evaluations += static_cast<int>(sel->trials.size());

    IterationRecord rec;
    rec.k = k;
    rec.t = sel->collapsed ? sel->trials.back().t : sel->t;
    rec.residual_v = est.denominator_v;
    rec.increment_u = out.final_increment_u;
    rec.h_prime = sel->collapsed ? sel->trials.back().h_prime : sel->h_prime;
    rec.bisection_trials = static_cast<int>(sel->trials.size());
    rec.kappa_k = est.kappa_k;
    rec.inner_iters = inc->inner_iterations;
    rec.u_display = space->u_norm(u);
    rec.du_display = out.final_increment_u;
    rec.trials = sel->trials;
    if (cfg.record_states) {
      rec.state = u;
      rec.increment = inc->delta;
    }
    out.trace.push_back(std::move(rec));
    if (sel->collapsed) {
      return finish(SolveStatus::step_collapse, "step size collapsed below t_min");
    }
    control.last_t = sel->t;
    control.last_h_prime = sel->h_prime;
    u = std::move(*sel->next_state);
    pending = std::move(*sel->next_increment);
  }
}

std::vector<double> per_mesh_final_residuals(std::span<const MeshHistoryEntry> history) {
  std::vector<double> out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i + 1 == history.size() || history[i + 1].dofs != history[i].dofs ||
        history[i + 1].cells != history[i].cells) {
      out.push_back(history[i].residual_v);
    }
  }
  return out;
}

}  // namespace bsc::adaptive
