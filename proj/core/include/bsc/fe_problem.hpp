#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bsc/fe_space.hpp"
#include "bsc/problem.hpp"

namespace bsc::problems {

/// Pointwise data of a 1-D weak form
///   F(u) phi = integral of flux(x, u, u') phi' + source(x, u, u') phi
/// together with the partial derivatives needed for F'(u) du.
struct FormPoint {
  double flux = 0.0;
  double source = 0.0;
  double dflux_du = 0.0;
  double dflux_dgrad = 0.0;
  double dsource_du = 0.0;
  double dsource_dgrad = 0.0;
};

class WeakForm1D {
 public:
  virtual ~WeakForm1D() = default;
  virtual FormPoint evaluate(double x, double u, double grad) const = 0;
  virtual bool jacobian_is_spd() const { return false; }
  virtual std::string name() const = 0;
};

/// eps u'' + 2 (1 - x^2) u + u^2 - 1 in weak form: flux -eps u'.
class CarrierForm final : public WeakForm1D {
 public:
  explicit CarrierForm(double epsilon);
  FormPoint evaluate(double x, double u, double grad) const override;
  std::string name() const override { return "carrier"; }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

/// Minimum surface in 1-D: flux g(u') = u' / sqrt(1 + u'^2).
class MinSurfForm final : public WeakForm1D {
 public:
  FormPoint evaluate(double x, double u, double grad) const override;
  bool jacobian_is_spd() const override { return true; }
  std::string name() const override { return "minsurf"; }
};

/// -u'' = f with constant f: flux u', source -f.
class PoissonForm final : public WeakForm1D {
 public:
  explicit PoissonForm(double rhs);
  FormPoint evaluate(double x, double u, double grad) const override;
  bool jacobian_is_spd() const override { return true; }
  std::string name() const override { return "poisson"; }

 private:
  double rhs_;
};

/// Galerkin residual of a WeakForm1D on an FeSpace. States hold the free
/// (interior) coefficients; the Dirichlet lift is kept here and added only
/// when evaluating the form.
class FeProblem final : public ResidualOperator {
 public:
  FeProblem(std::shared_ptr<const FeSpace> space, std::shared_ptr<const WeakForm1D> form,
            double left_value = 0.0, double right_value = 0.0);

  std::shared_ptr<const HilbertSpace> space() const override { return space_; }
  DualVector residual(const StateVector& u) const override;
  DualVector jacobian_action(const StateVector& u, const StateVector& du) const override;
  bool jacobian_is_spd() const override { return form_->jacobian_is_spd(); }

  const std::shared_ptr<const FeSpace>& fe_space() const { return space_; }
  const std::shared_ptr<const WeakForm1D>& form() const { return form_; }
  double left_value() const { return left_; }
  double right_value() const { return right_; }

  /// All nodal values of u including the lift.
  std::vector<double> full_values(const StateVector& u) const;
  /// Free coefficients of the nodal interpolant of `fn` (boundary values ignored).
  StateVector interpolate(const std::function<double(double)>& fn) const;

  /// Same form and lift on another space.
  std::shared_ptr<FeProblem> on_space(std::shared_ptr<const FeSpace> space) const;

 private:
  std::shared_ptr<const FeSpace> space_;
  std::shared_ptr<const WeakForm1D> form_;
  double left_;
  double right_;
};

}  // namespace bsc::problems
