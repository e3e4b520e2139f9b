#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "bsc/linalg.hpp"
#include "bsc/space.hpp"

namespace bsc {

/// Gauss-Legendre rule with n points on [0, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};

QuadratureRule gauss_legendre(std::size_t n);

/// n >= 2 Gauss-Lobatto points on [0, 1], endpoints included, ascending.
std::vector<double> gauss_lobatto_points(std::size_t n);

/// Lagrange basis of degree p on the Gauss-Lobatto points of [0, 1].
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }

  double value(std::size_t j, double xi) const;
  double derivative(std::size_t j, double xi) const;

 private:
  int degree_;
  std::vector<double> nodes_;
  std::vector<double> denominators_;
};

/// Partition of [a, b] into cells with a refinement level per cell.
class Mesh1D {
 public:
  explicit Mesh1D(std::vector<double> nodes, std::vector<int> levels = {});
  static Mesh1D uniform(double a, double b, std::size_t cells);

  std::size_t n_cells() const { return levels_.size(); }
  double a() const { return nodes_.front(); }
  double b() const { return nodes_.back(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const int> levels() const { return levels_; }

  double left(std::size_t cell) const { return nodes_[cell]; }
  double right(std::size_t cell) const { return nodes_[cell + 1]; }
  double width(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }
  int level(std::size_t cell) const { return levels_[cell]; }

  /// Cell containing x; interface points belong to the cell on the right
  /// except for x = b.
  std::size_t locate(double x) const;

  /// New mesh with each listed cell split at its midpoint.
  Mesh1D bisect(std::span<const std::size_t> cells) const;

  /// True if every node of `coarse` is a node of this mesh.
  bool refines(const Mesh1D& coarse) const;

  bool operator==(const Mesh1D&) const = default;

 private:
  std::vector<double> nodes_;
  std::vector<int> levels_;
};

/// Continuous degree-p Lagrange elements on a Mesh1D with homogeneous
/// Dirichlet conditions at both ends. Global nodes are numbered left to right
/// (cell c, local j -> c * p + j); the free dofs are the interior nodes
/// 1 .. n_cells * p - 1, shifted by one. <u, v>_U is the assembled stiffness
/// form of the integral of u' v'.
class FeSpace final : public HilbertSpace {
 public:
  static std::shared_ptr<const FeSpace> make(Mesh1D mesh, int degree);

  FeSpace(Mesh1D mesh, int degree);

  const Mesh1D& mesh() const { return mesh_; }
  int degree() const { return basis_.degree(); }
  const LagrangeBasis& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return quadrature_; }

  std::size_t n_nodes() const { return mesh_.n_cells() * static_cast<std::size_t>(degree()) + 1; }
  std::size_t global_node(std::size_t cell, std::size_t local) const {
    return cell * static_cast<std::size_t>(degree()) + local;
  }
  double node_coordinate(std::size_t global) const;
  std::vector<double> node_coordinates() const;

  /// Free coefficients plus boundary values -> all nodal values.
  std::vector<double> expand(std::span<const double> free, double left_value = 0.0,
                             double right_value = 0.0) const;

  /// Point evaluation of the function with all nodal values `full`.
  double evaluate(std::span<const double> full, double x) const;
  double evaluate_derivative(std::span<const double> full, double x) const;

  /// Cellwise integral of |u'|^2 for free coefficients u (zero boundary values).
  std::vector<double> cell_energy(std::span<const double> free) const;

  /// Basis values and reference derivatives (d/dxi on [0, 1]) at quadrature point q.
  std::span<const double> shape_values(std::size_t q) const { return phi_[q]; }
  std::span<const double> shape_derivatives(std::size_t q) const { return dphi_[q]; }

  const linalg::BandedSymmetricMatrix& stiffness() const { return stiffness_; }
  const linalg::BandedSymmetricMatrix& mass() const { return mass_; }

  std::vector<double> apply_inner_operator(std::span<const double> v) const override;
  std::vector<double> apply_mass(std::span<const double> v) const override;
  std::vector<double> solve_inner_operator(std::span<const double> rhs) const override;
  std::vector<double> inner_operator_diagonal() const override;

 private:
  Mesh1D mesh_;
  LagrangeBasis basis_;
  QuadratureRule quadrature_;
  std::vector<std::vector<double>> phi_;
  std::vector<std::vector<double>> dphi_;
  linalg::BandedSymmetricMatrix stiffness_;
  linalg::BandedSymmetricMatrix mass_;
  linalg::BandedCholesky factor_;
};

}  // namespace bsc
