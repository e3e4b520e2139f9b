#include "bsc/bsc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bsc {

void BscConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("BscConfig." + field + ": " + why);
  };
  if (!h_rel && !(H > 0.0)) {
    fail("H", "must be positive");
  }
  if (h_rel && !(*h_rel > 0.0)) {
    fail("h_rel", "must be positive");
  }
  if (!(h_lo_factor > 0.0 && h_lo_factor < 1.0)) {
    fail("h_lo_factor", "must lie in (0, 1)");
  }
  if (!(h_hi_factor > 1.0)) {
    fail("h_hi_factor", "must exceed 1");
  }
  if (!(t0 > 0.0 && t0 <= 1.0)) {
    fail("t0", "must lie in (0, 1]");
  }
  if (max_bisections < 1) {
    fail("max_bisections", "must be at least 1");
  }
  if (!(smoothing_weight >= 0.0 && smoothing_weight <= 1.0)) {
    fail("smoothing_weight", "must lie in [0, 1]");
  }
  if (!(residual_tol >= 0.0)) {
    fail("residual_tol", "must be nonnegative");
  }
  if (increment_tol && !(*increment_tol > 0.0)) {
    fail("increment_tol", "must be positive");
  }
  if (max_iterations < 1) {
    fail("max_iterations", "must be positive");
  }
  if (!(full_step_threshold > 0.0 && full_step_threshold <= 1.0)) {
    fail("full_step_threshold", "must lie in (0, 1]");
  }
  if (!(t_min > 0.0 && t_min < 1.0)) {
    fail("t_min", "must lie in (0, 1)");
  }
}

std::string to_string(TrialVerdict verdict) {
  switch (verdict) {
    case TrialVerdict::decrease:
      return "decrease t";
    case TrialVerdict::increase:
      return "increase t";
    case TrialVerdict::accept:
      return "accept t";
  }
  return "unknown";
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::step_collapse:
      return "step_collapse";
    case SolveStatus::operator_failure:
      return "operator_failure";
    case SolveStatus::saturated:
      return "saturated";
  }
  return "unknown";
}

int IterationRecord::rejected_trials() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const StepTrial& s) {
    return s.verdict != TrialVerdict::accept;
  }));
}

double display_value(const StateVector& v) {
  if (v.space().descriptor().kind == SpaceKind::scalar) {
    return v[0];
  }
  return v.space().u_norm(v);
}

BackwardDefect compute_g(const ProblemOperator& problem, const StateVector& u,
                         const StateVector& f_u, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("compute_g: t must lie in [0, 1]");
  }
  StateVector trial_point = u;
  trial_point.axpy(-t, f_u);
  Increment trial = problem.increment(trial_point);
  // f(u - t f(u)) = -du^+
  StateVector g = -trial.delta;
  g -= f_u;
  return BackwardDefect{std::move(g), std::move(trial), std::move(trial_point)};
}

double predict_step(const BscConfig& config, double t_prev, double h_prime_prev) {
  if (!(t_prev > 0.0)) {
    throw std::invalid_argument("predict_step: previous step must be positive");
  }
  if (!(h_prime_prev > 0.0)) {
    return 1.0;
  }
  // t^2 ||g|| / t ~ const locally, so H' scales like t^2
  const double raw = t_prev * std::sqrt(config.H / h_prime_prev);
  const double lambda = config.smoothing_weight;
  const double smoothed = std::exp(lambda * std::log(raw) + (1.0 - lambda) * std::log(t_prev));
  return std::clamp(smoothed, std::numeric_limits<double>::min(), 1.0);
}

double predict_step(const BscConfig& config, const StepControlState& state) {
  if (!state.last_t || !state.last_h_prime) {
    return config.t0;
  }
  return predict_step(config, *state.last_t, *state.last_h_prime);
}

StepSelection select_step_size(const ProblemOperator& problem, const StateVector& u,
                               const Increment& current, const BscConfig& config,
                               double predicted_t) {
  const auto& space = u.space();
  const double delta_norm = space.u_norm(current.delta);
  if (!(delta_norm > 0.0)) {
    throw std::invalid_argument("select_step_size: increment must be nonzero");
  }
  const StateVector f_u = -current.delta;
  const bool scalar = space.descriptor().kind == SpaceKind::scalar;

  StepSelection sel;
  sel.state.predicted_t = predicted_t;
  double t = std::clamp(predicted_t, config.t_min, 1.0);

  // largest t rejected as too small, kept in case the budget runs out
  std::optional<BackwardDefect> low;
  double low_h_prime = 0.0;
  bool full_step_tried = false;

  for (int bisections = 0;; ++bisections) {
    if (t >= config.full_step_threshold) {
      t = 1.0;
    }
    full_step_tried = full_step_tried || t == 1.0;
    BackwardDefect d = compute_g(problem, u, f_u, t);
    const double h_prime = t * space.u_norm(d.g);

    StepTrial trial;
    trial.t = t;
    trial.h_prime = h_prime;
    trial.trial_increment = scalar ? d.trial.delta[0] : space.u_norm(d.trial.delta);
    trial.inner_iterations = d.trial.inner_iterations;

    if (h_prime > config.h_hi()) {
      trial.verdict = TrialVerdict::decrease;
      sel.state.t_hi = t;
    } else if (h_prime < config.h_lo() && t < 1.0) {
      trial.verdict = TrialVerdict::increase;
      sel.state.t_lo = t;
      low = std::move(d);
      low_h_prime = h_prime;
    } else {
      trial.verdict = TrialVerdict::accept;
      sel.trials.push_back(trial);
      sel.t = t;
      sel.h_prime = h_prime;
      sel.next_state = std::move(d.trial_point);
      sel.next_increment = std::move(d.trial);
      return sel;
    }
    sel.trials.push_back(trial);

    if (bisections >= config.max_bisections) {
      // midpoints toward an untried t = 1 never reach it; test it once before giving up
      if (!full_step_tried && sel.state.t_hi == 1.0) {
        t = 1.0;
        continue;
      }
      break;
    }
    t = 0.5 * (sel.state.t_lo + sel.state.t_hi);
    if (t < config.t_min) {
      sel.collapsed = true;
      return sel;
    }
  }

  if (low) {
    sel.exhausted = true;
    sel.t = sel.state.t_lo;
    sel.h_prime = low_h_prime;
    sel.next_state = std::move(low->trial_point);
    sel.next_increment = std::move(low->trial);
    return sel;
  }
  sel.collapsed = true;
  return sel;
}

namespace {

IterationRecord make_record(int k, const StateVector& u, const Increment& inc, double residual,
                            const StepSelection& sel, bool keep_states) {
  IterationRecord rec;
  rec.k = k;
  rec.t = sel.collapsed ? sel.trials.back().t : sel.t;
  rec.residual_v = residual;
  rec.increment_u = u.space().u_norm(inc.delta);
  rec.h_prime = sel.collapsed ? sel.trials.back().h_prime : sel.h_prime;
  rec.bisection_trials = static_cast<int>(sel.trials.size());
  rec.kappa_k = inc.relative_residual;
  if (inc.inner_iterations > 0) {
    rec.inner_iters = inc.inner_iterations;
  }
  rec.u_display = display_value(u);
  rec.du_display = display_value(inc.delta);
  rec.trials = sel.trials;
  if (keep_states) {
    rec.state = u;
    rec.increment = inc.delta;
  }
  return rec;
}

}  // namespace

SolveOutcome solve(const ProblemOperator& problem, const StateVector& u0, const BscConfig& config) {
  config.validate();
  const auto space = problem.space();
  space->require_member(u0, "solve");

  SolveOutcome out{SolveStatus::max_iterations, u0, {}, 0.0, 0.0, config.H, 0, {}};
  BscConfig cfg = config;

  auto fail = [&out](SolveStatus status, const std::string& msg) {
    out.status = status;
    out.message = msg;
    return out;
  };

  std::optional<Increment> inc;
  try {
    inc = problem.increment(u0);
    ++out.increment_evaluations;
    out.final_residual_v = problem.residual_norm(u0);
  } catch (const OperatorFailure& e) {
    return fail(SolveStatus::operator_failure, e.what());
  } catch (const std::domain_error& e) {
    return fail(SolveStatus::operator_failure, e.what());
  }
  out.final_increment_u = space->u_norm(inc->delta);

  if (cfg.h_rel) {
    cfg.H = *cfg.h_rel * out.final_increment_u;
    if (!(cfg.H > 0.0) && out.final_residual_v > cfg.residual_tol) {
      return fail(SolveStatus::operator_failure, "h_rel: initial increment vanished");
    }
  }
  out.H = cfg.H;

  StepControlState control;
  for (int k = 0;; ++k) {
    const bool residual_ok = out.final_residual_v <= cfg.residual_tol;
    const bool increment_ok = cfg.increment_tol && out.final_increment_u <= *cfg.increment_tol;
    if (residual_ok || increment_ok) {
      out.status = SolveStatus::converged;
      break;
    }
    if (k == cfg.max_iterations) {
      out.status = SolveStatus::max_iterations;
      break;
    }
    if (!(out.final_increment_u > 0.0)) {
      return fail(SolveStatus::operator_failure, "increment vanished at a non-converged iterate");
    }

    const double predicted = predict_step(cfg, control);
    std::optional<StepSelection> sel;
    try {
      sel = select_step_size(problem, out.final_state, *inc, cfg, predicted);
    } catch (const OperatorFailure& e) {
      return fail(SolveStatus::operator_failure, e.what());
    } catch (const std::domain_error& e) {
      return fail(SolveStatus::operator_failure, e.what());
    }
    out.increment_evaluations += static_cast<int>(sel->trials.size());
    out.trace.push_back(make_record(k, out.final_state, *inc, out.final_residual_v, *sel,
                                    cfg.record_states));
    if (sel->collapsed) {
      std::ostringstream os;
      os << "step size collapsed below t_min = " << cfg.t_min << " at iteration " << k
         << " (H' > Hu at every trial; H = " << cfg.H << " too large for this problem)";
      return fail(SolveStatus::step_collapse, os.str());
    }

    control.last_t = sel->t;
    control.last_h_prime = sel->h_prime;
    out.final_state = std::move(*sel->next_state);
    inc = std::move(*sel->next_increment);
    out.final_increment_u = space->u_norm(inc->delta);
    try {
      out.final_residual_v = problem.residual_norm(out.final_state);
    } catch (const std::domain_error& e) {
      return fail(SolveStatus::operator_failure, e.what());
    }
  }
  return out;
}

SqrtDecreaseCheck check_sqrt_decrease(std::span<const IterationRecord> trace, double H, double c,
                                      double full_step_threshold) {
  if (trace.empty()) {
    throw std::invalid_argument("check_sqrt_decrease: empty trace");
  }
  if (!(H > 0.0)) {
    throw std::invalid_argument("check_sqrt_decrease: H must be positive");
  }
  SqrtDecreaseCheck check;
  std::size_t n = 0;
  while (n < trace.size() && trace[n].t < full_step_threshold) {
    ++n;
  }
  check.prefix_length = n;
  check.max_c = std::numeric_limits<double>::infinity();
  const double root0 = std::sqrt(trace[0].residual_v);
  for (std::size_t k = 1; k < n; ++k) {
    const double bound = (root0 - std::sqrt(trace[k].residual_v)) /
                         (static_cast<double>(k) * std::sqrt(H));
    check.max_c = std::min(check.max_c, bound);
  }
  check.holds = c <= check.max_c;
  return check;
}

}  // namespace bsc
