#include "bsc/space.hpp"

#include <cmath>
#include <sstream>

namespace bsc {

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::scalar:
      return "scalar";
    case SpaceKind::uniform_grid:
      return "uniform-grid";
    case SpaceKind::fe_mesh:
      return "fe-mesh";
  }
  return "unknown";
}

void SpaceDescriptor::validate() const {
  if (n_dof < 1) {
    throw std::invalid_argument("SpaceDescriptor: n_dof must be at least 1");
  }
  if (!(a < b)) {
    throw std::invalid_argument("SpaceDescriptor: domain requires a < b");
  }
}

// ---------------------------------------------------------------------------
// BasicVector

template <class Tag>
BasicVector<Tag>::BasicVector(std::shared_ptr<const HilbertSpace> space)
    : space_(std::move(space)) {
  if (!space_) {
    throw std::invalid_argument("vector requires a space");
  }
  coeffs_.assign(space_->dim(), 0.0);
}

template <class Tag>
BasicVector<Tag>::BasicVector(std::shared_ptr<const HilbertSpace> space, std::vector<double> coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (!space_) {
    throw std::invalid_argument("vector requires a space");
  }
  if (coeffs_.size() != space_->dim()) {
    std::ostringstream os;
    os << "dimension mismatch: " << coeffs_.size() << " coefficients for a space with "
       << space_->dim() << " degrees of freedom";
    throw std::invalid_argument(os.str());
  }
  check_finite();
}

template <class Tag>
bool BasicVector<Tag>::same_space(const BasicVector& other) const {
  return space_ == other.space_ || space_->descriptor() == other.space_->descriptor();
}

template <class Tag>
void BasicVector<Tag>::check_compatible(const BasicVector& other) const {
  if (!same_space(other)) {
    throw std::invalid_argument("cannot combine vectors from different spaces");
  }
}

template <class Tag>
void BasicVector<Tag>::check_finite() const {
  if (!linalg::all_finite(coeffs_)) {
    throw std::domain_error("non-finite coefficient in vector");
  }
}

template <class Tag>
BasicVector<Tag>& BasicVector<Tag>::operator+=(const BasicVector& other) {
  return axpy(1.0, other);
}

template <class Tag>
BasicVector<Tag>& BasicVector<Tag>::operator-=(const BasicVector& other) {
  return axpy(-1.0, other);
}

template <class Tag>
BasicVector<Tag>& BasicVector<Tag>::operator*=(double s) {
  for (double& c : coeffs_) {
    c *= s;
  }
  check_finite();
  return *this;
}

template <class Tag>
BasicVector<Tag>& BasicVector<Tag>::axpy(double a, const BasicVector& x) {
  check_compatible(x);
  linalg::axpy(a, x.coeffs_, coeffs_);
  check_finite();
  return *this;
}

template class BasicVector<PrimalTag>;
template class BasicVector<DualTag>;

// ---------------------------------------------------------------------------
// HilbertSpace

HilbertSpace::HilbertSpace(SpaceDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
}

StateVector HilbertSpace::zero() const { return StateVector(self()); }

DualVector HilbertSpace::zero_dual() const { return DualVector(self()); }

StateVector HilbertSpace::make_state(std::vector<double> coeffs) const {
  return StateVector(self(), std::move(coeffs));
}

DualVector HilbertSpace::make_dual(std::vector<double> coeffs) const {
  return DualVector(self(), std::move(coeffs));
}

double HilbertSpace::inner(const StateVector& u, const StateVector& v) const {
  require_member(u, "inner");
  require_member(v, "inner");
  const auto av = apply_inner_operator(v.coeffs());
  return linalg::dot(u.coeffs(), av);
}

double HilbertSpace::u_norm(const StateVector& u) const {
  const double s = inner(u, u);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

StateVector HilbertSpace::riesz(const DualVector& v) const {
  require_member(v, "riesz");
  return make_state(solve_inner_operator(v.coeffs()));
}

StateVector HilbertSpace::riesz_of_function(const StateVector& v) const {
  return riesz(to_dual(v));
}

DualVector HilbertSpace::to_dual(const StateVector& v) const {
  require_member(v, "to_dual");
  return make_dual(apply_mass(v.coeffs()));
}

double HilbertSpace::v_norm(const DualVector& v) const { return u_norm(riesz(v)); }

double HilbertSpace::pairing(const DualVector& v, const StateVector& u) const {
  require_member(v, "pairing");
  require_member(u, "pairing");
  return linalg::dot(v.coeffs(), u.coeffs());
}

// ---------------------------------------------------------------------------
// ScalarSpace

ScalarSpace::ScalarSpace()
    : HilbertSpace(SpaceDescriptor{SpaceKind::scalar, 0.0, 1.0, 1, BoundaryKind::none, 0}) {}

std::shared_ptr<const ScalarSpace> ScalarSpace::make() { return std::make_shared<ScalarSpace>(); }

std::vector<double> ScalarSpace::apply_inner_operator(std::span<const double> v) const {
  return {v.begin(), v.end()};
}

std::vector<double> ScalarSpace::apply_mass(std::span<const double> v) const {
  return {v.begin(), v.end()};
}

std::vector<double> ScalarSpace::solve_inner_operator(std::span<const double> rhs) const {
  return {rhs.begin(), rhs.end()};
}

std::vector<double> ScalarSpace::inner_operator_diagonal() const { return {1.0}; }

// ---------------------------------------------------------------------------
// UniformGridSpace

namespace {

linalg::BandedSymmetricMatrix grid_stiffness(std::size_t n, double h) {
  linalg::BandedSymmetricMatrix k(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    k.add(i, i, 2.0 / h);
    if (i > 0) {
      k.add(i, i - 1, -1.0 / h);
    }
  }
  return k;
}

}  // namespace

UniformGridSpace::UniformGridSpace(double a, double b, std::size_t n)
    : HilbertSpace(SpaceDescriptor{SpaceKind::uniform_grid, a, b, n,
                                   BoundaryKind::homogeneous_dirichlet, 0}),
      h_((b - a) / static_cast<double>(n + 1)),
      factor_(grid_stiffness(n, h_)) {
  if (!(h_ > 0.0)) {
    throw std::invalid_argument("UniformGridSpace: grid spacing must be positive");
  }
}

std::shared_ptr<const UniformGridSpace> UniformGridSpace::make(double a, double b, std::size_t n) {
  return std::make_shared<UniformGridSpace>(a, b, n);
}

double UniformGridSpace::x(std::size_t i) const {
  return descriptor().a + static_cast<double>(i + 1) * h_;
}

std::vector<double> UniformGridSpace::nodes() const {
  std::vector<double> xs(dim());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = x(i);
  }
  return xs;
}

std::vector<double> UniformGridSpace::apply_inner_operator(std::span<const double> v) const {
  const std::size_t n = dim();
  if (v.size() != n) {
    throw std::invalid_argument("UniformGridSpace: length mismatch");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? v[i - 1] : 0.0;
    const double right = i + 1 < n ? v[i + 1] : 0.0;
    out[i] = (2.0 * v[i] - left - right) / h_;
  }
  return out;
}

std::vector<double> UniformGridSpace::apply_mass(std::span<const double> v) const {
  std::vector<double> out(v.begin(), v.end());
  for (double& c : out) {
    c *= h_;
  }
  return out;
}

std::vector<double> UniformGridSpace::solve_inner_operator(std::span<const double> rhs) const {
  return factor_.solve(rhs);
}

std::vector<double> UniformGridSpace::inner_operator_diagonal() const {
  return std::vector<double>(dim(), 2.0 / h_);
}

}  // namespace bsc
