#include "bsc/fe_problem.hpp"

#include <stdexcept>

#include "bsc/problems.hpp"

namespace bsc::problems {

CarrierForm::CarrierForm(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("CarrierForm: epsilon must be positive");
  }
}

FormPoint CarrierForm::evaluate(double x, double u, double grad) const {
  FormPoint p;
  p.flux = -epsilon_ * grad;
  p.dflux_dgrad = -epsilon_;
  p.source = 2.0 * (1.0 - x * x) * u + u * u - 1.0;
  p.dsource_du = 2.0 * (1.0 - x * x) + 2.0 * u;
  return p;
}

FormPoint MinSurfForm::evaluate(double, double, double grad) const {
  FormPoint p;
  p.flux = minsurf_flux(grad);
  p.dflux_dgrad = minsurf_flux_derivative(grad);
  return p;
}

PoissonForm::PoissonForm(double rhs) : rhs_(rhs) {}

FormPoint PoissonForm::evaluate(double, double, double grad) const {
  FormPoint p;
  p.flux = grad;
  p.dflux_dgrad = 1.0;
  p.source = -rhs_;
  return p;
}

FeProblem::FeProblem(std::shared_ptr<const FeSpace> space, std::shared_ptr<const WeakForm1D> form,
                     double left_value, double right_value)
    : space_(std::move(space)), form_(std::move(form)), left_(left_value), right_(right_value) {
  if (!space_ || !form_) {
    throw std::invalid_argument("FeProblem: null space or form");
  }
}

std::vector<double> FeProblem::full_values(const StateVector& u) const {
  space_->require_member(u, "FeProblem");
  return space_->expand(u.coeffs(), left_, right_);
}

StateVector FeProblem::interpolate(const std::function<double(double)>& fn) const {
  std::vector<double> free(space_->dim());
  for (std::size_t i = 0; i < free.size(); ++i) {
    free[i] = fn(space_->node_coordinate(i + 1));
  }
  return space_->make_state(std::move(free));
}

std::shared_ptr<FeProblem> FeProblem::on_space(std::shared_ptr<const FeSpace> space) const {
  return std::make_shared<FeProblem>(std::move(space), form_, left_, right_);
}

DualVector FeProblem::residual(const StateVector& u) const {
  const auto full = full_values(u);
  const FeSpace& s = *space_;
  const std::size_t nb = s.basis().size();
  const std::size_t last = s.n_nodes() - 1;
  const auto& rule = s.quadrature();
  std::vector<double> r(s.dim(), 0.0);
  for (std::size_t c = 0; c < s.mesh().n_cells(); ++c) {
    const double w = s.mesh().width(c);
    const double x0 = s.mesh().left(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto phi = s.shape_values(q);
      const auto dphi = s.shape_derivatives(q);
      double uq = 0.0;
      double gq = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        const double uj = full[s.global_node(c, j)];
        uq += uj * phi[j];
        gq += uj * dphi[j];
      }
      gq /= w;
      const FormPoint fp = form_->evaluate(x0 + w * rule.points[q], uq, gq);
      const double jw = rule.weights[q] * w;
      for (std::size_t i = 0; i < nb; ++i) {
        const std::size_t g = s.global_node(c, i);
        if (g == 0 || g == last) {
          continue;
        }
        r[g - 1] += jw * (fp.flux * dphi[i] / w + fp.source * phi[i]);
      }
    }
  }
  return s.make_dual(std::move(r));
}

DualVector FeProblem::jacobian_action(const StateVector& u, const StateVector& du) const {
  const auto full = full_values(u);
  space_->require_member(du, "FeProblem jacobian");
  const auto dfull = space_->expand(du.coeffs());
  const FeSpace& s = *space_;
  const std::size_t nb = s.basis().size();
  const std::size_t last = s.n_nodes() - 1;
  const auto& rule = s.quadrature();
  std::vector<double> r(s.dim(), 0.0);
  for (std::size_t c = 0; c < s.mesh().n_cells(); ++c) {
    const double w = s.mesh().width(c);
    const double x0 = s.mesh().left(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto phi = s.shape_values(q);
      const auto dphi = s.shape_derivatives(q);
      double uq = 0.0;
      double gq = 0.0;
      double duq = 0.0;
      double dgq = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        const std::size_t g = s.global_node(c, j);
        uq += full[g] * phi[j];
        gq += full[g] * dphi[j];
        duq += dfull[g] * phi[j];
        dgq += dfull[g] * dphi[j];
      }
      gq /= w;
      dgq /= w;
      const FormPoint fp = form_->evaluate(x0 + w * rule.points[q], uq, gq);
      const double dflux = fp.dflux_du * duq + fp.dflux_dgrad * dgq;
      const double dsource = fp.dsource_du * duq + fp.dsource_dgrad * dgq;
      const double jw = rule.weights[q] * w;
      for (std::size_t i = 0; i < nb; ++i) {
        const std::size_t g = s.global_node(c, i);
        if (g == 0 || g == last) {
          continue;
        }
        r[g - 1] += jw * (dflux * dphi[i] / w + dsource * phi[i]);
      }
    }
  }
  return s.make_dual(std::move(r));
}

}  // namespace bsc::problems
