#include "bsc/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bsc::krylov {

void KrylovConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw std::invalid_argument("KrylovConfig: kappa must lie in (0, 1)");
  }
  if (max_iters < 1) {
    throw std::invalid_argument("KrylovConfig: max_iters must be positive");
  }
  if (restart && *restart < 1) {
    throw std::invalid_argument("KrylovConfig: restart must be positive");
  }
}

LinearOperatorSpec riesz_preconditioned(std::shared_ptr<const HilbertSpace> space,
                                        std::function<DualVector(const StateVector&)> apply) {
  LinearOperatorSpec op;
  op.apply = std::move(apply);
  op.precondition = [space](const DualVector& v) { return space->riesz(v); };
  op.inner = [space](const StateVector& a, const StateVector& b) { return space->inner(a, b); };
  return op;
}

namespace {

double norm(const LinearOperatorSpec& op, const StateVector& v) {
  const double s = op.inner(v, v);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

StateVector preconditioned_residual(const LinearOperatorSpec& op, const DualVector& rhs,
                                    const StateVector& x) {
  DualVector r = rhs;
  r -= op.apply(x);
  return op.precondition(r);
}

/// Solves the leading k x k upper-triangular system R y = g.
std::vector<double> back_substitute(const std::vector<std::vector<double>>& r,
                                    const std::vector<double>& g, std::size_t k) {
  std::vector<double> y(k, 0.0);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = g[ii];
    for (std::size_t j = ii + 1; j < k; ++j) {
      s -= r[j][ii] * y[j];
    }
    y[ii] = s / r[ii][ii];
  }
  return y;
}

StateVector combine(const StateVector& x0, const std::vector<StateVector>& basis,
                    const std::vector<double>& y) {
  StateVector x = x0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    x.axpy(y[i], basis[i]);
  }
  return x;
}

constexpr double kOrthogonalityLoss = 1e-8;

}  // namespace

double relative_residual(const LinearOperatorSpec& op, const DualVector& rhs, const StateVector& x) {
  const double denom = norm(op, op.precondition(rhs));
  if (denom == 0.0) {
    return 0.0;
  }
  return norm(op, preconditioned_residual(op, rhs, x)) / denom;
}

KrylovResult gmres(const LinearOperatorSpec& op, const DualVector& rhs, const KrylovConfig& config) {
  config.validate();
  const StateVector r0 = op.precondition(rhs);
  const double beta0 = norm(op, r0);
  KrylovResult result{r0.space_ptr()->zero(), 0.0, 0, false, std::nullopt, {}, {}, {}};
  if (beta0 == 0.0) {
    result.converged = true;
    return result;
  }

  StateVector x = result.increment;
  const int cycle_length = config.restart.value_or(config.max_iters);
  bool first_cycle = true;

  while (result.iterations < config.max_iters) {
    StateVector r = first_cycle ? r0 : preconditioned_residual(op, rhs, x);
    first_cycle = false;
    const double beta = norm(op, r);
    if (beta == 0.0) {
      result.converged = true;
      break;
    }
    r *= 1.0 / beta;
    std::vector<StateVector> v{r};
    std::vector<std::vector<double>> h;  // column-major Hessenberg, rotated in place
    std::vector<double> cs;
    std::vector<double> sn;
    std::vector<double> g{beta};
    std::size_t k = 0;
    bool stop = false;

    while (static_cast<int>(k) < cycle_length && result.iterations < config.max_iters) {
      StateVector w = op.precondition(op.apply(v[k]));
      std::vector<double> col(k + 2, 0.0);
      for (std::size_t i = 0; i <= k; ++i) {
        col[i] = op.inner(w, v[i]);
        w.axpy(-col[i], v[i]);
      }
      double wn = norm(op, w);
      // second Gram-Schmidt pass when the first left visible components
      double loss = 0.0;
      std::vector<double> c(k + 1);
      for (std::size_t i = 0; i <= k; ++i) {
        c[i] = op.inner(w, v[i]);
        loss = std::max(loss, std::abs(c[i]));
      }
      if (wn > 0.0 && loss > kOrthogonalityLoss * wn) {
        for (std::size_t i = 0; i <= k; ++i) {
          w.axpy(-c[i], v[i]);
          col[i] += c[i];
        }
        wn = norm(op, w);
      }
      col[k + 1] = wn;

      for (std::size_t i = 0; i < k; ++i) {
        const double t = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = t;
      }
      const double denom = std::hypot(col[k], col[k + 1]);
      cs.push_back(denom == 0.0 ? 1.0 : col[k] / denom);
      sn.push_back(denom == 0.0 ? 0.0 : col[k + 1] / denom);
      col[k] = denom;
      col[k + 1] = 0.0;
      g.push_back(-sn[k] * g[k]);
      g[k] = cs[k] * g[k];
      h.push_back(std::move(col));
      ++k;
      ++result.iterations;

      const double estimate = std::abs(g[k]) / beta0;
      result.residual_history.push_back(estimate);
      const bool breakdown = wn <= 1e-14 * beta || h.back()[k - 1] == 0.0;

      if (config.keep_iterates) {
        result.basis.push_back(v[k - 1]);
        result.iterates.push_back(combine(x, v, back_substitute(h, g, k)));
      }

      if (estimate <= config.kappa || breakdown) {
        StateVector candidate = combine(x, v, back_substitute(h, g, k));
        const double exact = relative_residual(op, rhs, candidate);
        if (exact <= config.kappa || breakdown) {
          if (config.alpha_interpolation && !breakdown) {
            StateVector penult = combine(x, v, back_substitute(h, g, k - 1));
            try {
              auto [mix, alpha] = alpha_interpolate(penult, candidate, op, rhs, config.kappa);
              candidate = std::move(mix);
              result.alpha = alpha;
            } catch (const std::invalid_argument&) {
              // the previous iterate already met the tolerance
              result.alpha = 1.0;
            }
          }
          x = std::move(candidate);
          result.converged = true;
          stop = true;
          break;
        }
      }
      if (breakdown) {
        break;
      }
      w *= 1.0 / wn;
      v.push_back(std::move(w));
    }

    if (stop) {
      break;
    }
    x = combine(x, v, back_substitute(h, g, k));
  }

  result.relative_residual = relative_residual(op, rhs, x);
  result.increment = std::move(x);
  return result;
}

KrylovResult cg(const LinearOperatorSpec& op, const DualVector& rhs, const KrylovConfig& config) {
  config.validate();
  StateVector z = op.precondition(rhs);
  const auto& space = *z.space_ptr();
  KrylovResult result{space.zero(), 0.0, 0, false, std::nullopt, {}, {}, {}};
  double rho = space.pairing(rhs, z);
  if (rho <= 0.0) {
    if (rho < 0.0) {
      throw std::domain_error("cg: preconditioner is not positive definite");
    }
    result.converged = true;
    return result;
  }
  const double bnorm = std::sqrt(rho);
  DualVector r = rhs;
  StateVector p = z;
  StateVector& x = result.increment;

  while (result.iterations < config.max_iters) {
    const DualVector q = op.apply(p);
    const double curvature = space.pairing(q, p);
    if (!(curvature > 0.0)) {
      std::ostringstream os;
      os << "cg: operator is not positive definite (p^T A p = " << curvature << " at iteration "
         << result.iterations + 1 << ")";
      throw std::domain_error(os.str());
    }
    const double a = rho / curvature;
    x.axpy(a, p);
    r.axpy(-a, q);
    z = op.precondition(r);
    const double rho_next = space.pairing(r, z);
    ++result.iterations;
    const double rel = std::sqrt(std::max(rho_next, 0.0)) / bnorm;
    result.residual_history.push_back(rel);
    if (config.keep_iterates) {
      result.iterates.push_back(x);
    }
    result.relative_residual = rel;
    if (rel <= config.kappa) {
      result.converged = true;
      break;
    }
    p *= rho_next / rho;
    p += z;
    rho = rho_next;
  }
  return result;
}

std::pair<StateVector, double> alpha_interpolate(const StateVector& penult, const StateVector& last,
                                                 const LinearOperatorSpec& op,
                                                 const DualVector& rhs, double kappa) {
  const double target = kappa * norm(op, op.precondition(rhs));
  const StateVector r0 = preconditioned_residual(op, rhs, penult);
  const StateVector r1 = preconditioned_residual(op, rhs, last);
  const double nu0 = norm(op, r0);
  const double nu1 = norm(op, r1);
  if (!(nu0 > target) || nu1 > target * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "alpha_interpolate: need nu(0) > kappa ||F|| >= nu(1), got nu(0) = " << nu0
       << ", nu(1) = " << nu1 << ", kappa ||F|| = " << target;
    throw std::invalid_argument(os.str());
  }
  if (nu1 >= target) {
    return {last, 1.0};
  }
  // nu(alpha)^2 = a alpha^2 + b alpha + c along the residual segment
  StateVector d = r1;
  d -= r0;
  const double a = op.inner(d, d);
  const double b = 2.0 * op.inner(r0, d);
  const double c = nu0 * nu0 - target * target;
  double alpha = 0.0;
  if (a <= 1e-300) {
    alpha = -c / b;
  } else {
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    alpha = 2.0 * c / (-b + std::sqrt(disc));
  }
  alpha = std::clamp(alpha, 0.0, 1.0);
  StateVector mix = (1.0 - alpha) * penult;
  mix.axpy(alpha, last);
  return {std::move(mix), alpha};
}

KrylovNewtonProblem::KrylovNewtonProblem(std::shared_ptr<const ResidualOperator> base,
                                         KrylovConfig config, Method method)
    : base_(std::move(base)), config_(config), method_(method) {
  if (!base_) {
    throw std::invalid_argument("KrylovNewtonProblem: null residual operator");
  }
  config_.validate();
}

Increment KrylovNewtonProblem::increment(const StateVector& u) const {
  DualVector rhs = -base_->residual(u);
  const auto space = base_->space();
  const auto op = riesz_preconditioned(
      space, [this, &u](const StateVector& du) { return base_->jacobian_action(u, du); });
  std::optional<KrylovResult> solved;
  try {
    solved.emplace(method_ == Method::gmres ? gmres(op, rhs, config_) : cg(op, rhs, config_));
  } catch (const std::domain_error& e) {
    throw OperatorFailure(std::string("inner solve failed: ") + e.what());
  }
  KrylovResult& r = *solved;
  if (!r.converged) {
    std::ostringstream os;
    os << (method_ == Method::gmres ? "gmres" : "cg") << " did not reach kappa = "
       << config_.kappa << " within " << r.iterations
       << " iterations (relative residual " << r.relative_residual << ")";
    throw OperatorFailure(os.str());
  }
  return Increment{std::move(r.increment), r.iterations, r.relative_residual};
}

}  // namespace bsc::krylov
