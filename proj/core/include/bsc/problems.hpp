#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "bsc/problem.hpp"
#include "bsc/space.hpp"

namespace bsc::problems {

/// F(u) = arctan(u) on the real line with the exact inverse derivative
/// M(u) = 1 + u^2, so f(u) = (1 + u^2) arctan(u).
class ArctanProblem final : public ProblemOperator {
 public:
  ArctanProblem();

  std::shared_ptr<const HilbertSpace> space() const override { return space_; }
  DualVector residual(const StateVector& u) const override;
  DualVector jacobian_action(const StateVector& u, const StateVector& du) const override;
  Increment increment(const StateVector& u) const override;
  std::string name() const override { return "arctan"; }

  StateVector point(double u) const { return space_->make_state({u}); }

 private:
  std::shared_ptr<const HilbertSpace> space_;
};

double arctan_residual(double u);
/// du = -(1 + u^2) arctan(u)
double arctan_increment(double u);

/// F(u) = slope * u - shift on the real line with exact M = 1 / slope.
class AffineScalarProblem final : public ProblemOperator {
 public:
  AffineScalarProblem(double slope, double shift);

  std::shared_ptr<const HilbertSpace> space() const override { return space_; }
  DualVector residual(const StateVector& u) const override;
  DualVector jacobian_action(const StateVector& u, const StateVector& du) const override;
  bool jacobian_is_spd() const override { return slope_ > 0.0; }
  Increment increment(const StateVector& u) const override;
  std::string name() const override { return "affine"; }

  StateVector point(double u) const { return space_->make_state({u}); }

 private:
  std::shared_ptr<const HilbertSpace> space_;
  double slope_;
  double shift_;
};

/// eps u'' + 2 (1 - x^2) u + u^2 = 1 on (-1, 1), u(+-1) = 0, discretized by
/// central differences on interior nodes. The residual is mass weighted:
/// F(u)_i = h (eps (D2 u)_i + 2 (1 - x_i^2) u_i + u_i^2 - 1).
class CarrierProblem final : public ResidualOperator {
 public:
  CarrierProblem(double epsilon, std::size_t n_dof);

  std::shared_ptr<const HilbertSpace> space() const override { return space_; }
  DualVector residual(const StateVector& u) const override;
  DualVector jacobian_action(const StateVector& u, const StateVector& du) const override;

  double epsilon() const { return epsilon_; }
  const UniformGridSpace& grid() const { return *space_; }

 private:
  double epsilon_;
  std::shared_ptr<const UniformGridSpace> space_;
};

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

/// g(v) = v / sqrt(1 + |v|^2)
Vec2 minsurf_flux(const Vec2& v);
/// g'(v) = (I - v v^T / (1 + |v|^2)) / sqrt(1 + |v|^2)
Mat2 minsurf_flux_jacobian(const Vec2& v);

double minsurf_flux(double v);
double minsurf_flux_derivative(double v);

}  // namespace bsc::problems
