#pragma once

#include <stdexcept>
#include <string>

namespace vfp {

/// Invalid parameters, descriptors or grid settings detected before any
/// computation starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of a function was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The particle integrator produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double t, double max_abs_v)
      : std::runtime_error("particle state diverged at t=" + std::to_string(t) +
                           " (max |v| = " + std::to_string(max_abs_v) + ")"),
        t_(t),
        max_abs_v_(max_abs_v) {}

  double time() const noexcept { return t_; }
  double max_abs_velocity() const noexcept { return max_abs_v_; }

 private:
  double t_;
  double max_abs_v_;
};

/// The grid scheme left the admissible set (negative density beyond the
/// clamping threshold).
class SchemeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-point iteration exhausted its budget.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(int iterations, double residual)
      : std::runtime_error("fixed point did not converge after " + std::to_string(iterations) +
                           " iterations (last L1 update " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Quadratic confinement lost (precision not positive definite).
class UnconfinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// relative_entropy(f, g) with g vanishing where f carries mass.
class SupportError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace vfp
