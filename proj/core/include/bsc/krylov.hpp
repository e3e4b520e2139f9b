#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bsc/problem.hpp"
#include "bsc/space.hpp"

namespace bsc::krylov {

/// A = P F' where F' maps U to V and P maps V back to U. GMRES runs Arnoldi
/// in `inner`; with P the Riesz map, the preconditioned residual U-norm is
/// the V-norm of the unpreconditioned residual.
struct LinearOperatorSpec {
  std::function<DualVector(const StateVector&)> apply;
  std::function<StateVector(const DualVector&)> precondition;
  std::function<double(const StateVector&, const StateVector&)> inner;
};

/// Operator description with the Riesz map of `space` as preconditioner and the
/// U inner product of `space`.
LinearOperatorSpec riesz_preconditioned(std::shared_ptr<const HilbertSpace> space,
                                        std::function<DualVector(const StateVector&)> apply);

struct KrylovConfig {
  double kappa = 1e-2;
  int max_iters = 500;
  std::optional<int> restart;
  bool alpha_interpolation = false;
  /// Keep every iterate and the Krylov basis in the result (tests, diagnostics).
  bool keep_iterates = false;

  void validate() const;
};

struct KrylovResult {
  StateVector increment;
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> alpha;
  /// Relative residual estimate after each iteration (index m - 1 for iterate m).
  std::vector<double> residual_history;
  std::vector<StateVector> iterates;
  std::vector<StateVector> basis;
};

/// Relative preconditioned residual ||P(rhs - F' x)||_U / ||P rhs||_U.
double relative_residual(const LinearOperatorSpec& op, const DualVector& rhs, const StateVector& x);

/// Residual-minimizing Krylov solve of F' x = rhs from x0 = 0.
KrylovResult gmres(const LinearOperatorSpec& op, const DualVector& rhs, const KrylovConfig& config);

/// Preconditioned CG for F' x = rhs with F' symmetric positive definite and P
/// symmetric positive definite. Stops on sqrt(r^T P r) <= kappa sqrt(b^T P b).
/// Throws std::domain_error when a direction of non-positive curvature shows up.
KrylovResult cg(const LinearOperatorSpec& op, const DualVector& rhs, const KrylovConfig& config);

/// Convex combination (1 - alpha) penult + alpha last whose preconditioned
/// residual norm equals kappa ||P rhs||_U. Requires
/// nu(0) > kappa ||P rhs||_U >= nu(1); throws std::invalid_argument otherwise.
std::pair<StateVector, double> alpha_interpolate(const StateVector& penult, const StateVector& last,
                                                 const LinearOperatorSpec& op,
                                                 const DualVector& rhs, double kappa);

enum class Method { gmres, cg };

/// Inexact Newton increments: du solves F'(u) du = -F(u) by a Riesz
/// preconditioned Krylov method to relative tolerance kappa.
class KrylovNewtonProblem final : public ProblemOperator {
 public:
  KrylovNewtonProblem(std::shared_ptr<const ResidualOperator> base, KrylovConfig config,
                      Method method = Method::gmres);

  std::shared_ptr<const HilbertSpace> space() const override { return base_->space(); }
  DualVector residual(const StateVector& u) const override { return base_->residual(u); }
  DualVector jacobian_action(const StateVector& u, const StateVector& du) const override {
    return base_->jacobian_action(u, du);
  }
  bool jacobian_is_spd() const override { return base_->jacobian_is_spd(); }
  Increment increment(const StateVector& u) const override;
  std::string name() const override { return "krylov-newton"; }

  const KrylovConfig& config() const { return config_; }
  const ResidualOperator& base() const { return *base_; }

 private:
  std::shared_ptr<const ResidualOperator> base_;
  KrylovConfig config_;
  Method method_;
};

}  // namespace bsc::krylov
