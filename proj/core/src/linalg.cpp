#include "bsc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsc::linalg {

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dot: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i] * y[i];
  }
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: length mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += a * x[i];
  }
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

namespace {

std::string singular_message(std::size_t row, double pivot, std::size_t size) {
  std::ostringstream os;
  os << "banded Cholesky: non-positive pivot " << pivot << " at row " << row << " of "
     << size << " (matrix not symmetric positive definite)";
  return os.str();
}

}  // namespace

SingularMatrixError::SingularMatrixError(std::size_t row, double pivot, std::size_t size)
    : std::runtime_error(singular_message(row, pivot, size)), row_(row), pivot_(pivot) {}

BandedSymmetricMatrix::BandedSymmetricMatrix(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

double BandedSymmetricMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i < j) {
    std::swap(i, j);
  }
  if (i >= n_ || i - j > bw_) {
    return 0.0;
  }
  return data_[i * (bw_ + 1) + (i - j)];
}

void BandedSymmetricMatrix::add(std::size_t i, std::size_t j, double v) {
  if (i < j) {
    std::swap(i, j);
  }
  if (i >= n_ || i - j > bw_) {
    throw std::out_of_range("BandedSymmetricMatrix::add: entry outside the band");
  }
  data_[i * (bw_ + 1) + (i - j)] += v;
}

std::vector<double> BandedSymmetricMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) {
    throw std::invalid_argument("BandedSymmetricMatrix::multiply: length mismatch");
  }
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const double* row = &data_[i * (bw_ + 1)];
    y[i] += row[0] * x[i];
    const std::size_t jmin = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = jmin; j < i; ++j) {
      const double a = row[i - j];
      y[i] += a * x[j];
      y[j] += a * x[i];
    }
  }
  return y;
}

std::vector<double> BandedSymmetricMatrix::diagonal() const {
  std::vector<double> d(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    d[i] = data_[i * (bw_ + 1)];
  }
  return d;
}

BandedCholesky::BandedCholesky(const BandedSymmetricMatrix& a) : factor_(a) {
  const std::size_t n = factor_.n_;
  const std::size_t bw = factor_.bw_;
  auto l = [&](std::size_t i, std::size_t j) -> double& {
    return factor_.data_[i * (bw + 1) + (i - j)];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t jmin = i > bw ? i - bw : 0;
    for (std::size_t j = jmin; j <= i; ++j) {
      double s = l(i, j);
      const std::size_t kmin = std::max(jmin, j > bw ? j - bw : 0);
      for (std::size_t k = kmin; k < j; ++k) {
        s -= l(i, k) * l(j, k);
      }
      if (i == j) {
        if (!(s > 0.0)) {
          throw SingularMatrixError(i, s, n);
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
}

std::vector<double> BandedCholesky::solve(std::span<const double> b) const {
  const std::size_t n = factor_.n_;
  const std::size_t bw = factor_.bw_;
  if (b.size() != n) {
    throw std::invalid_argument("BandedCholesky::solve: length mismatch");
  }
  const auto& d = factor_.data_;
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t jmin = i > bw ? i - bw : 0;
    double s = x[i];
    for (std::size_t j = jmin; j < i; ++j) {
      s -= d[i * (bw + 1) + (i - j)] * x[j];
    }
    x[i] = s / d[i * (bw + 1)];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    x[ii] /= d[ii * (bw + 1)];
    const std::size_t jmin = ii > bw ? ii - bw : 0;
    for (std::size_t j = jmin; j < ii; ++j) {
      x[j] -= d[ii * (bw + 1) + (ii - j)] * x[ii];
    }
  }
  return x;
}

}  // namespace bsc::linalg
