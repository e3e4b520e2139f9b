#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <stdexcept>
#include <vector>

#include "bsc/linalg.hpp"

namespace bsc {

enum class SpaceKind { scalar, uniform_grid, fe_mesh };
enum class BoundaryKind { none, homogeneous_dirichlet };

std::string to_string(SpaceKind kind);

/// Identifies the discretization a coefficient vector belongs to.
struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::scalar;
  double a = 0.0;
  double b = 1.0;
  std::size_t n_dof = 1;
  BoundaryKind boundary = BoundaryKind::none;
  /// Distinguishes FE layouts that share n_dof (hash of nodes and degree).
  std::uint64_t layout = 0;

  bool operator==(const SpaceDescriptor&) const = default;

  /// Throws std::invalid_argument unless n_dof >= 1 and a < b.
  void validate() const;
};

class HilbertSpace;

struct PrimalTag {};
struct DualTag {};

/// Coefficient vector tagged with its space. PrimalTag vectors live in U,
/// DualTag vectors are assembled functionals (elements of V = U*).
/// Coefficients are finite after every operation; arithmetic between vectors
/// of different spaces throws.
template <class Tag>
class BasicVector {
 public:
  explicit BasicVector(std::shared_ptr<const HilbertSpace> space);
  BasicVector(std::shared_ptr<const HilbertSpace> space, std::vector<double> coeffs);

  const HilbertSpace& space() const { return *space_; }
  const std::shared_ptr<const HilbertSpace>& space_ptr() const { return space_; }

  std::size_t size() const { return coeffs_.size(); }
  std::span<const double> coeffs() const { return coeffs_; }
  double operator[](std::size_t i) const { return coeffs_[i]; }

  bool same_space(const BasicVector& other) const;

  BasicVector& operator+=(const BasicVector& other);
  BasicVector& operator-=(const BasicVector& other);
  BasicVector& operator*=(double s);
  /// this += a * x
  BasicVector& axpy(double a, const BasicVector& x);

  friend BasicVector operator+(BasicVector lhs, const BasicVector& rhs) { return lhs += rhs; }
  friend BasicVector operator-(BasicVector lhs, const BasicVector& rhs) { return lhs -= rhs; }
  friend BasicVector operator*(double s, BasicVector v) { return v *= s; }
  friend BasicVector operator-(BasicVector v) { return v *= -1.0; }

 private:
  void check_compatible(const BasicVector& other) const;
  void check_finite() const;

  std::shared_ptr<const HilbertSpace> space_;
  std::vector<double> coeffs_;
};

using StateVector = BasicVector<PrimalTag>;
using DualVector = BasicVector<DualTag>;

extern template class BasicVector<PrimalTag>;
extern template class BasicVector<DualTag>;

/// The pair (U, V = U*) of a discretization: U inner product
/// <u, v>_U = u^T A_U v, the L2 mass form M, and the Riesz map V -> U
/// solving A_U r = v so that ||v||_V = ||r||_U.
class HilbertSpace : public std::enable_shared_from_this<HilbertSpace> {
 public:
  explicit HilbertSpace(SpaceDescriptor descriptor);
  virtual ~HilbertSpace() = default;

  HilbertSpace(const HilbertSpace&) = delete;
  HilbertSpace& operator=(const HilbertSpace&) = delete;

  const SpaceDescriptor& descriptor() const { return descriptor_; }
  std::size_t dim() const { return descriptor_.n_dof; }

  /// v -> A_U v
  virtual std::vector<double> apply_inner_operator(std::span<const double> v) const = 0;
  /// v -> M v, the quadrature of the integral of v times a test function
  virtual std::vector<double> apply_mass(std::span<const double> v) const = 0;
  /// Direct solve A_U r = rhs.
  virtual std::vector<double> solve_inner_operator(std::span<const double> rhs) const = 0;
  /// Diagonal of A_U (Jacobi preconditioning).
  virtual std::vector<double> inner_operator_diagonal() const = 0;

  StateVector zero() const;
  DualVector zero_dual() const;
  StateVector make_state(std::vector<double> coeffs) const;
  DualVector make_dual(std::vector<double> coeffs) const;

  double inner(const StateVector& u, const StateVector& v) const;
  double u_norm(const StateVector& u) const;

  /// Riesz representative of an assembled functional.
  StateVector riesz(const DualVector& v) const;
  /// Riesz representative of the L2 function with nodal values `v`.
  StateVector riesz_of_function(const StateVector& v) const;
  /// The functional phi -> integral of v * phi.
  DualVector to_dual(const StateVector& v) const;

  double v_norm(const DualVector& v) const;
  /// Duality pairing <v, u>.
  double pairing(const DualVector& v, const StateVector& u) const;

  /// Throws std::invalid_argument unless the vector belongs to this space.
  template <class Tag>
  void require_member(const BasicVector<Tag>& v, const char* what) const;

  std::shared_ptr<const HilbertSpace> self() const { return shared_from_this(); }

 private:
  SpaceDescriptor descriptor_;
};

/// The real line with <u, v> = u v; every norm is the absolute value.
class ScalarSpace final : public HilbertSpace {
 public:
  static std::shared_ptr<const ScalarSpace> make();

  std::vector<double> apply_inner_operator(std::span<const double> v) const override;
  std::vector<double> apply_mass(std::span<const double> v) const override;
  std::vector<double> solve_inner_operator(std::span<const double> rhs) const override;
  std::vector<double> inner_operator_diagonal() const override;

  ScalarSpace();
};

/// H^1_0(a, b) on a uniform grid of interior nodes, h = (b - a) / (n + 1).
/// A_U = tridiag(-1, 2, -1) / h, lumped mass M = h I.
class UniformGridSpace final : public HilbertSpace {
 public:
  static std::shared_ptr<const UniformGridSpace> make(double a, double b, std::size_t n);

  double h() const { return h_; }
  /// Coordinate of interior node i (0-based): a + (i + 1) h.
  double x(std::size_t i) const;
  std::vector<double> nodes() const;

  std::vector<double> apply_inner_operator(std::span<const double> v) const override;
  std::vector<double> apply_mass(std::span<const double> v) const override;
  std::vector<double> solve_inner_operator(std::span<const double> rhs) const override;
  std::vector<double> inner_operator_diagonal() const override;

  UniformGridSpace(double a, double b, std::size_t n);

 private:
  double h_;
  linalg::BandedCholesky factor_;
};

template <class Tag>
void HilbertSpace::require_member(const BasicVector<Tag>& v, const char* what) const {
  if (v.space_ptr().get() != this && !(v.space().descriptor() == descriptor_)) {
    throw std::invalid_argument(std::string(what) + ": vector belongs to a different space");
  }
}

}  // namespace bsc
