#include "bsc/fe_space.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bsc {

namespace {

/// Legendre polynomial P_n(x) and its derivative on [-1, 1].
std::pair<double, double> legendre(std::size_t n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    return {1.0, 0.0};
  }
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = pk;
  }
  const double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("gauss_legendre: need at least one point");
  }
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double dp = legendre(n, x).second;
    // the initial guesses descend, so fill from the back to get ascending points
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::vector<double> gauss_lobatto_points(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("gauss_lobatto_points: need at least two points");
  }
  const std::size_t degree = n - 1;
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(degree));
    if (i != 0 && i != degree) {
      // interior points are roots of P'_degree; Newton on (1 - x^2) P'(x)
      for (int it = 0; it < 100; ++it) {
        const auto [p, dp] = legendre(degree, x);
        // d/dx[(1 - x^2) P'] = -degree (degree + 1) P
        const double f = (1.0 - x * x) * dp;
        const double df = -static_cast<double>(degree * (degree + 1)) * p;
        const double dx = f / df;
        x -= dx;
        if (std::abs(dx) < 1e-16) {
          break;
        }
      }
    }
    pts[i] = 0.5 * (x + 1.0);
  }
  pts.front() = 0.0;
  pts.back() = 1.0;
  return pts;
}

// ---------------------------------------------------------------------------

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1) {
    throw std::invalid_argument("LagrangeBasis: degree must be at least 1");
  }
  nodes_ = gauss_lobatto_points(static_cast<std::size_t>(degree) + 1);
  denominators_.resize(nodes_.size());
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    double d = 1.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k != j) {
        d *= nodes_[j] - nodes_[k];
      }
    }
    denominators_[j] = d;
  }
}

double LagrangeBasis::value(std::size_t j, double xi) const {
  double v = 1.0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (k != j) {
      v *= xi - nodes_[k];
    }
  }
  return v / denominators_[j];
}

double LagrangeBasis::derivative(std::size_t j, double xi) const {
  double sum = 0.0;
  for (std::size_t m = 0; m < nodes_.size(); ++m) {
    if (m == j) {
      continue;
    }
    double prod = 1.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k != j && k != m) {
        prod *= xi - nodes_[k];
      }
    }
    sum += prod;
  }
  return sum / denominators_[j];
}

// ---------------------------------------------------------------------------

Mesh1D::Mesh1D(std::vector<double> nodes, std::vector<int> levels)
    : nodes_(std::move(nodes)), levels_(std::move(levels)) {
  if (nodes_.size() < 2) {
    throw std::invalid_argument("Mesh1D: need at least one cell");
  }
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i + 1] - nodes_[i] > 1e-12)) {
      throw std::invalid_argument("Mesh1D: nodes must increase with cell width > 1e-12");
    }
  }
  if (levels_.empty()) {
    levels_.assign(nodes_.size() - 1, 0);
  }
  if (levels_.size() != nodes_.size() - 1) {
    throw std::invalid_argument("Mesh1D: one level per cell required");
  }
}

Mesh1D Mesh1D::uniform(double a, double b, std::size_t cells) {
  if (cells == 0 || !(a < b)) {
    throw std::invalid_argument("Mesh1D::uniform: need cells >= 1 and a < b");
  }
  std::vector<double> nodes(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    nodes[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(cells);
  }
  nodes.back() = b;
  return Mesh1D(std::move(nodes));
}

std::size_t Mesh1D::locate(double x) const {
  if (x <= nodes_.front()) {
    return 0;
  }
  if (x >= nodes_.back()) {
    return n_cells() - 1;
  }
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

Mesh1D Mesh1D::bisect(std::span<const std::size_t> cells) const {
  std::vector<bool> marked(n_cells(), false);
  for (std::size_t c : cells) {
    if (c >= n_cells()) {
      throw std::out_of_range("Mesh1D::bisect: cell index out of range");
    }
    marked[c] = true;
  }
  std::vector<double> nodes;
  std::vector<int> levels;
  nodes.reserve(nodes_.size() + cells.size());
  for (std::size_t c = 0; c < n_cells(); ++c) {
    nodes.push_back(nodes_[c]);
    if (marked[c]) {
      nodes.push_back(0.5 * (nodes_[c] + nodes_[c + 1]));
      levels.push_back(levels_[c] + 1);
      levels.push_back(levels_[c] + 1);
    } else {
      levels.push_back(levels_[c]);
    }
  }
  nodes.push_back(nodes_.back());
  return Mesh1D(std::move(nodes), std::move(levels));
}

bool Mesh1D::refines(const Mesh1D& coarse) const {
  if (coarse.a() != a() || coarse.b() != b()) {
    return false;
  }
  return std::includes(nodes_.begin(), nodes_.end(), coarse.nodes_.begin(), coarse.nodes_.end());
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t layout_hash(const Mesh1D& mesh, int degree) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(degree));
  for (double x : mesh.nodes()) {
    mix(std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

SpaceDescriptor fe_descriptor(const Mesh1D& mesh, int degree) {
  if (degree < 1) {
    throw std::invalid_argument("FeSpace: degree must be at least 1");
  }
  const std::size_t nodes = mesh.n_cells() * static_cast<std::size_t>(degree) + 1;
  if (nodes < 3) {
    throw std::invalid_argument("FeSpace: need at least one interior degree of freedom");
  }
  return SpaceDescriptor{SpaceKind::fe_mesh, mesh.a(), mesh.b(), nodes - 2,
                         BoundaryKind::homogeneous_dirichlet, layout_hash(mesh, degree)};
}

struct CellTables {
  std::vector<std::vector<double>> phi;   // [q][j]
  std::vector<std::vector<double>> dphi;  // [q][j], reference derivative
};

CellTables tabulate(const LagrangeBasis& basis, const QuadratureRule& rule) {
  CellTables t;
  for (double xi : rule.points) {
    std::vector<double> v(basis.size());
    std::vector<double> d(basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) {
      v[j] = basis.value(j, xi);
      d[j] = basis.derivative(j, xi);
    }
    t.phi.push_back(std::move(v));
    t.dphi.push_back(std::move(d));
  }
  return t;
}

/// Assembles the free-dof block of the stiffness (mass = false) or mass matrix.
linalg::BandedSymmetricMatrix assemble(const Mesh1D& mesh, const LagrangeBasis& basis,
                                       const QuadratureRule& rule, bool mass) {
  const std::size_t p = static_cast<std::size_t>(basis.degree());
  const std::size_t n_nodes = mesh.n_cells() * p + 1;
  linalg::BandedSymmetricMatrix m(n_nodes - 2, p);
  const CellTables t = tabulate(basis, rule);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double w = mesh.width(c);
    for (std::size_t i = 0; i <= p; ++i) {
      const std::size_t gi = c * p + i;
      if (gi == 0 || gi == n_nodes - 1) {
        continue;
      }
      for (std::size_t j = 0; j <= i; ++j) {
        const std::size_t gj = c * p + j;
        if (gj == 0 || gj == n_nodes - 1) {
          continue;
        }
        double s = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          s += rule.weights[q] * (mass ? t.phi[q][i] * t.phi[q][j] * w
                                       : t.dphi[q][i] * t.dphi[q][j] / w);
        }
        m.add(gi - 1, gj - 1, s);
      }
    }
  }
  return m;
}

}  // namespace

FeSpace::FeSpace(Mesh1D mesh, int degree)
    : HilbertSpace(fe_descriptor(mesh, degree)),
      mesh_(std::move(mesh)),
      basis_(degree),
      quadrature_(gauss_legendre(static_cast<std::size_t>(degree) + 2)),
      phi_(tabulate(basis_, quadrature_).phi),
      dphi_(tabulate(basis_, quadrature_).dphi),
      stiffness_(assemble(mesh_, basis_, quadrature_, false)),
      mass_(assemble(mesh_, basis_, quadrature_, true)),
      factor_(stiffness_) {}

std::shared_ptr<const FeSpace> FeSpace::make(Mesh1D mesh, int degree) {
  return std::make_shared<FeSpace>(std::move(mesh), degree);
}

double FeSpace::node_coordinate(std::size_t global) const {
  const std::size_t p = static_cast<std::size_t>(degree());
  if (global >= n_nodes()) {
    throw std::out_of_range("FeSpace::node_coordinate");
  }
  if (global == n_nodes() - 1) {
    return mesh_.b();
  }
  const std::size_t cell = global / p;
  const std::size_t local = global % p;
  return mesh_.left(cell) + mesh_.width(cell) * basis_.nodes()[local];
}

std::vector<double> FeSpace::node_coordinates() const {
  std::vector<double> xs(n_nodes());
  for (std::size_t g = 0; g < xs.size(); ++g) {
    xs[g] = node_coordinate(g);
  }
  return xs;
}

std::vector<double> FeSpace::expand(std::span<const double> free, double left_value,
                                    double right_value) const {
  if (free.size() != dim()) {
    throw std::invalid_argument("FeSpace::expand: length mismatch");
  }
  std::vector<double> full(n_nodes());
  full.front() = left_value;
  full.back() = right_value;
  std::copy(free.begin(), free.end(), full.begin() + 1);
  return full;
}

double FeSpace::evaluate(std::span<const double> full, double x) const {
  if (full.size() != n_nodes()) {
    throw std::invalid_argument("FeSpace::evaluate: length mismatch");
  }
  const std::size_t c = mesh_.locate(x);
  const double xi = (x - mesh_.left(c)) / mesh_.width(c);
  double v = 0.0;
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    v += full[global_node(c, j)] * basis_.value(j, xi);
  }
  return v;
}

double FeSpace::evaluate_derivative(std::span<const double> full, double x) const {
  if (full.size() != n_nodes()) {
    throw std::invalid_argument("FeSpace::evaluate_derivative: length mismatch");
  }
  const std::size_t c = mesh_.locate(x);
  const double xi = (x - mesh_.left(c)) / mesh_.width(c);
  double v = 0.0;
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    v += full[global_node(c, j)] * basis_.derivative(j, xi);
  }
  return v / mesh_.width(c);
}

std::vector<double> FeSpace::cell_energy(std::span<const double> free) const {
  const auto full = expand(free);
  std::vector<double> e(mesh_.n_cells(), 0.0);
  for (std::size_t c = 0; c < mesh_.n_cells(); ++c) {
    const double w = mesh_.width(c);
    double s = 0.0;
    for (std::size_t q = 0; q < quadrature_.points.size(); ++q) {
      double du = 0.0;
      for (std::size_t j = 0; j < basis_.size(); ++j) {
        du += full[global_node(c, j)] * dphi_[q][j];
      }
      du /= w;
      s += quadrature_.weights[q] * du * du * w;
    }
    e[c] = s;
  }
  return e;
}

std::vector<double> FeSpace::apply_inner_operator(std::span<const double> v) const {
  return stiffness_.multiply(v);
}

std::vector<double> FeSpace::apply_mass(std::span<const double> v) const {
  return mass_.multiply(v);
}

std::vector<double> FeSpace::solve_inner_operator(std::span<const double> rhs) const {
  return factor_.solve(rhs);
}

std::vector<double> FeSpace::inner_operator_diagonal() const { return stiffness_.diagonal(); }

}  // namespace bsc
