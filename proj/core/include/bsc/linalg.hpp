#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsc::linalg {

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> x);

/// Raised when a direct factorization meets a non-positive pivot.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(std::size_t row, double pivot, std::size_t size);

  std::size_t row() const { return row_; }
  double pivot() const { return pivot_; }

 private:
  std::size_t row_;
  double pivot_;
};

/// Symmetric band matrix. Only the lower band is stored, row by row:
/// entry (i, j) with i - bandwidth <= j <= i lives at i * (bandwidth + 1) + (i - j).
class BandedSymmetricMatrix {
 public:
  BandedSymmetricMatrix() = default;
  BandedSymmetricMatrix(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Value of entry (i, j); zero outside the band.
  double operator()(std::size_t i, std::size_t j) const;

  /// Adds v to (i, j) and, implicitly, to (j, i).
  void add(std::size_t i, std::size_t j, double v);

  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;

 private:
  friend class BandedCholesky;
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

/// Cholesky factor L (L L^T = A) in the same band layout.
class BandedCholesky {
 public:
  explicit BandedCholesky(const BandedSymmetricMatrix& a);

  std::size_t size() const { return factor_.n_; }
  std::vector<double> solve(std::span<const double> b) const;

 private:
  BandedSymmetricMatrix factor_;
};

}  // namespace bsc::linalg
