#include "bsc/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace bsc::problems {

double arctan_residual(double u) { return std::atan(u); }

double arctan_increment(double u) { return -(u * u + 1.0) * std::atan(u); }

ArctanProblem::ArctanProblem() : space_(ScalarSpace::make()) {}

DualVector ArctanProblem::residual(const StateVector& u) const {
  space_->require_member(u, "arctan residual");
  return space_->make_dual({arctan_residual(u[0])});
}

DualVector ArctanProblem::jacobian_action(const StateVector& u, const StateVector& du) const {
  space_->require_member(u, "arctan jacobian");
  return space_->make_dual({du[0] / (1.0 + u[0] * u[0])});
}

Increment ArctanProblem::increment(const StateVector& u) const {
  space_->require_member(u, "arctan increment");
  return Increment{space_->make_state({arctan_increment(u[0])}), 0, 0.0};
}

AffineScalarProblem::AffineScalarProblem(double slope, double shift)
    : space_(ScalarSpace::make()), slope_(slope), shift_(shift) {
  if (slope == 0.0) {
    throw std::invalid_argument("AffineScalarProblem: slope must be nonzero");
  }
}

DualVector AffineScalarProblem::residual(const StateVector& u) const {
  return space_->make_dual({slope_ * u[0] - shift_});
}

DualVector AffineScalarProblem::jacobian_action(const StateVector&, const StateVector& du) const {
  return space_->make_dual({slope_ * du[0]});
}

Increment AffineScalarProblem::increment(const StateVector& u) const {
  return Increment{space_->make_state({-(slope_ * u[0] - shift_) / slope_}), 0, 0.0};
}

CarrierProblem::CarrierProblem(double epsilon, std::size_t n_dof)
    : epsilon_(epsilon), space_(UniformGridSpace::make(-1.0, 1.0, n_dof)) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("CarrierProblem: epsilon must be positive");
  }
}

DualVector CarrierProblem::residual(const StateVector& u) const {
  space_->require_member(u, "carrier residual");
  const std::size_t n = space_->dim();
  const double h = space_->h();
  // h * eps * D2 u = -eps * K u with K = tridiag(-1, 2, -1) / h
  std::vector<double> r = space_->apply_inner_operator(u.coeffs());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = space_->x(i);
    const double ui = u[i];
    r[i] = -epsilon_ * r[i] + h * (2.0 * (1.0 - x * x) * ui + ui * ui - 1.0);
  }
  return space_->make_dual(std::move(r));
}

DualVector CarrierProblem::jacobian_action(const StateVector& u, const StateVector& du) const {
  space_->require_member(u, "carrier jacobian");
  space_->require_member(du, "carrier jacobian");
  const std::size_t n = space_->dim();
  const double h = space_->h();
  std::vector<double> r = space_->apply_inner_operator(du.coeffs());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = space_->x(i);
    r[i] = -epsilon_ * r[i] + h * (2.0 * (1.0 - x * x) + 2.0 * u[i]) * du[i];
  }
  return space_->make_dual(std::move(r));
}

Vec2 minsurf_flux(const Vec2& v) {
  const double r = std::hypot(1.0, std::hypot(v[0], v[1]));
  return {v[0] / r, v[1] / r};
}

Mat2 minsurf_flux_jacobian(const Vec2& v) {
  const double q = 1.0 + v[0] * v[0] + v[1] * v[1];
  const double s = 1.0 / std::sqrt(q);
  Mat2 m{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      m[i][j] = s * ((i == j ? 1.0 : 0.0) - v[i] * v[j] / q);
    }
  }
  return m;
}

double minsurf_flux(double v) { return v / std::hypot(1.0, v); }

double minsurf_flux_derivative(double v) {
  const double q = 1.0 + v * v;
  return 1.0 / (q * std::sqrt(q));
}

}  // namespace bsc::problems
