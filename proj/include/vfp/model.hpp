#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace vfp {

using ScalarFn = std::function<double(double)>;

/// Coefficients of K(x) = a x^2 + b x. Kernels of this form admit O(N)
/// evaluation of pairwise sums through power sums.
struct QuadraticCoefficients {
  double a = 0.0;
  double b = 0.0;
};

/// One-dimensional interaction potential K together with its first two
/// derivatives and a certified bound on sup |K''|.
///
/// The bound is trusted, never estimated: the smallness predicate built on
/// it is only as good as the value supplied here.
class InteractionKernel {
 public:
  InteractionKernel(std::string name, ScalarFn evaluate, ScalarFn d1, ScalarFn d2, double d2_sup,
                    bool is_even, std::optional<QuadraticCoefficients> quadratic = std::nullopt);

  double evaluate(double x) const { return evaluate_(x); }
  double d1(double x) const { return d1_(x); }
  double d2(double x) const { return d2_(x); }
  double d2_sup() const noexcept { return d2_sup_; }
  bool is_even() const noexcept { return is_even_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<QuadraticCoefficients>& quadratic() const noexcept { return quadratic_; }

 private:
  std::string name_;
  ScalarFn evaluate_;
  ScalarFn d1_;
  ScalarFn d2_;
  double d2_sup_;
  bool is_even_;
  std::optional<QuadraticCoefficients> quadratic_;
};

namespace kernel {
struct Zero {};
struct QuadraticLinear {
  double a = 0.0;
  double b = 0.0;
};
struct Sine {
  double amplitude = 1.0;
};
struct GaussianBump {
  double height = 1.0;
  double width = 1.0;
};
struct Symmetrized;
}  // namespace kernel

using KernelDescriptor = std::variant<kernel::Zero, kernel::QuadraticLinear, kernel::Sine,
                                      kernel::GaussianBump, kernel::Symmetrized>;

namespace kernel {
struct Symmetrized {
  std::shared_ptr<const KernelDescriptor> inner;
};
}  // namespace kernel

/// K = 0, a x^2 + b x, c sin x, h exp(-x^2 / (2 w^2)), or (K(x) + K(-x)) / 2.
InteractionKernel builtin_kernel(const KernelDescriptor& descriptor);

KernelDescriptor symmetrized(KernelDescriptor inner);

/// Friction gamma, interaction intensity lambda and the interaction kernel.
struct ModelParams {
  double gamma = 1.0;
  double lambda = 0.0;
  InteractionKernel kernel;
};

/// Validates gamma > 0 and lambda >= 0 (finite), throwing ConfigError.
ModelParams make_model_params(double gamma, double lambda, InteractionKernel kernel);

/// lambda * sup|K''| <= min(gamma, 1/gamma) / 8.
bool smallness_holds(const ModelParams& params);

/// Largest lambda for which smallness_holds is true (infinity for K'' = 0).
double smallness_threshold(double gamma, double d2_sup);

/// Constants of the modified coupling norm and of the twisted Fisher
/// information.
struct CouplingConstants {
  double a = 0.0;
  double b = 0.0;
  Eigen::Matrix2d M;
  /// Symmetric square root of M^{-1}.
  Eigen::Matrix2d A;
};

CouplingConstants coupling_constants(double gamma);

/// max(2, b + 2a^2) / min(1/2, b / (1 + 2a^2)); the prefactor between the
/// modified and the Euclidean squared norms.
double norm_equivalence_ratio(const CouplingConstants& c);

/// Discrete probability measure on the real line.
struct WeightedSamples {
  std::span<const double> points;
  std::span<const double> weights;
};

/// -lambda * sum_j w_j K'(x - y_j). Throws ContractViolation when the
/// weights do not sum to one within 1e-10.
double mean_field_force(const ModelParams& params, double x, const WeightedSamples& marginal);

}  // namespace vfp
