#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bsc/bsc.hpp"
#include "bsc/fe_problem.hpp"
#include "bsc/fe_space.hpp"
#include "bsc/krylov.hpp"

namespace bsc::adaptive {

using problems::FeProblem;

/// Galerkin increment system F'(u) du = -F(u) on the space of `problem`.
struct IncrementSystem {
  std::function<DualVector(const StateVector&)> apply;
  DualVector rhs;
};

IncrementSystem assemble_increment_system(const FeProblem& problem, const StateVector& u);

/// Increment provider for FE problems: CG when the Jacobian is SPD, GMRES
/// otherwise, both Riesz preconditioned.
std::shared_ptr<krylov::KrylovNewtonProblem> increment_provider(
    std::shared_ptr<const FeProblem> problem, double kappa, int max_iters = 2000);

enum class RieszSolve { jacobi_cg, direct };

struct KappaOptions {
  RieszSolve mode = RieszSolve::jacobi_cg;
  double numerator_tol = 0.1;
  double denominator_tol = 0.05;
  int max_iters = 100000;
};

struct KappaEstimate {
  double kappa_k = 0.0;
  double numerator_v = 0.0;
  double denominator_v = 0.0;
  /// Cellwise split of ||r||_U^2 for the Riesz representative r of the numerator.
  std::vector<double> cell_contributions;
  /// F(u_k) vanished on the enriched space.
  bool converged = false;
  int numerator_iterations = 0;
  int denominator_iterations = 0;
};

/// Nodal interpolation of u (plus boundary values) into a nested space.
/// Throws std::invalid_argument when `to` does not refine `from`.
StateVector transfer_solution(const StateVector& u, const FeSpace& from, const FeSpace& to,
                              double left_value = 0.0, double right_value = 0.0);

/// Degree p + 1 companion of `space` on the same mesh.
std::shared_ptr<const FeSpace> enriched_space(const FeSpace& space);

/// kappa_k = ||F(u) + F'(u) du||_V / ||F(u)||_V with both V-norms taken on `enriched`.
/// Passing the space of `problem` itself gives kappa_k = 0 for exact Galerkin increments.
KappaEstimate estimate_kappa(const FeProblem& problem, std::shared_ptr<const FeSpace> enriched,
                             const StateVector& u, const StateVector& du,
                             const KappaOptions& options = {});
KappaEstimate estimate_kappa(const FeProblem& problem, const StateVector& u, const StateVector& du,
                             const KappaOptions& options = {});

struct RefinementPolicy {
  double kappa_target = 0.5;
  /// Cells with contribution > 2^-mark_exponent * max are marked.
  double mark_exponent = 1.0;
  std::size_t max_cells = 4096;

  void validate() const;
};

struct RefineResult {
  Mesh1D mesh;
  std::vector<std::size_t> refined;
  bool saturated = false;
};

RefineResult mark_and_refine(const Mesh1D& mesh, std::span<const double> contributions,
                             const RefinementPolicy& policy);
RefineResult mark_and_refine(const Mesh1D& mesh, const KappaEstimate& estimate,
                             const RefinementPolicy& policy);

struct AdaptiveConfig {
  BscConfig bsc;
  RefinementPolicy policy;
  /// Phase 1 stops once ||du||_U falls below this.
  double phase1_increment_tol = 0.01;
  /// Relative tolerance of the inner Krylov solves for increments.
  double increment_kappa = 1e-3;
  KappaOptions kappa;
  /// At the cell cap, keep iterating on the frozen mesh instead of stopping.
  bool continue_on_saturation = false;
  /// Frozen-mesh iteration stops once ||du||_U falls below this.
  double saturated_increment_tol = 0.01;

  void validate() const;
};

/// One kappa evaluation in phase 2.
struct KappaTrial {
  int iteration = 0;
  std::size_t cells = 0;
  std::size_t dofs = 0;
  double kappa = 0.0;
  double residual_v = 0.0;
  bool accepted = false;
};

struct MeshHistoryEntry {
  int iteration = 0;
  std::size_t cells = 0;
  std::size_t dofs = 0;
  std::vector<double> kappa_trials;
  std::optional<double> kappa_accepted;
  double residual_v = 0.0;
};

struct AdaptiveOutcome {
  SolveOutcome outcome;
  std::shared_ptr<const FeProblem> final_problem;
  int phase1_iterations = 0;
  std::vector<MeshHistoryEntry> history;
  std::vector<KappaTrial> trials;
};

/// Two-phase multilevel Newton: BSC Newton on the initial mesh until the
/// increment is small, then kappa-driven refinement with the BSC step.
AdaptiveOutcome adaptive_solve(std::shared_ptr<const FeProblem> problem, const StateVector& u0,
                               const AdaptiveConfig& config);

/// Last residual_v of the history entries on each mesh, in mesh order.
std::vector<double> per_mesh_final_residuals(std::span<const MeshHistoryEntry> history);

}  // namespace bsc::adaptive
