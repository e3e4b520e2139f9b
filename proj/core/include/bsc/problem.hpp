#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "bsc/space.hpp"

namespace bsc {

/// Raised by an increment provider that cannot deliver f(u), e.g. after an
/// inner solver breakdown. The outer iteration turns it into operator_failure.
class OperatorFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Residual F: U -> V and its directional derivative F'(u) du.
class ResidualOperator {
 public:
  virtual ~ResidualOperator() = default;

  virtual std::shared_ptr<const HilbertSpace> space() const = 0;
  virtual DualVector residual(const StateVector& u) const = 0;
  virtual DualVector jacobian_action(const StateVector& u, const StateVector& du) const = 0;
  /// Whether F'(u) is symmetric positive definite for every u (enables CG).
  virtual bool jacobian_is_spd() const { return false; }

  double residual_norm(const StateVector& u) const { return space()->v_norm(residual(u)); }
};

/// The Newton increment du = -f(u) = -M(u) F(u) together with inner-solve
/// diagnostics.
struct Increment {
  StateVector delta;
  int inner_iterations = 0;
  /// ||F(u) + F'(u) du||_V / ||F(u)||_V when known.
  std::optional<double> relative_residual;
};

/// A residual operator bundled with its increment provider f.
class ProblemOperator : public ResidualOperator {
 public:
  virtual Increment increment(const StateVector& u) const = 0;
  /// Short label for traces.
  virtual std::string name() const { return "problem"; }
};

}  // namespace bsc
