#include "vfp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "vfp/errors.hpp"

namespace vfp {

InteractionKernel::InteractionKernel(std::string name, ScalarFn evaluate, ScalarFn d1, ScalarFn d2,
                                     double d2_sup, bool is_even,
                                     std::optional<QuadraticCoefficients> quadratic)
    : name_(std::move(name)),
      evaluate_(std::move(evaluate)),
      d1_(std::move(d1)),
      d2_(std::move(d2)),
      d2_sup_(d2_sup),
      is_even_(is_even),
      quadratic_(quadratic) {
  if (!evaluate_ || !d1_ || !d2_) {
    throw ConfigError("interaction kernel '" + name_ + "' is missing K, K' or K''");
  }
  if (!(d2_sup_ >= 0.0) || !std::isfinite(d2_sup_)) {
    throw ConfigError("interaction kernel '" + name_ + "' needs a finite bound d2_sup >= 0");
  }
}

namespace {

struct KernelBuilder {
  InteractionKernel operator()(const kernel::Zero&) const {
    auto zero = [](double) { return 0.0; };
    return {"zero", zero, zero, zero, 0.0, true, QuadraticCoefficients{0.0, 0.0}};
  }

  InteractionKernel operator()(const kernel::QuadraticLinear& q) const {
    const double a = q.a;
    const double b = q.b;
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw ConfigError("quadratic_linear kernel coefficients must be finite");
    }
    return {"quadratic_linear",
            [a, b](double x) { return a * x * x + b * x; },
            [a, b](double x) { return 2.0 * a * x + b; },
            [a](double) { return 2.0 * a; },
            2.0 * std::abs(a),
            b == 0.0,
            QuadraticCoefficients{a, b}};
  }

  InteractionKernel operator()(const kernel::Sine& s) const {
    const double c = s.amplitude;
    if (!std::isfinite(c)) throw ConfigError("sine kernel amplitude must be finite");
    return {"sine",
            [c](double x) { return c * std::sin(x); },
            [c](double x) { return c * std::cos(x); },
            [c](double x) { return -c * std::sin(x); },
            std::abs(c),
            c == 0.0};
  }

  InteractionKernel operator()(const kernel::GaussianBump& g) const {
    const double h = g.height;
    const double w = g.width;
    if (!std::isfinite(h) || !(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("gaussian_bump kernel needs finite height and width > 0");
    }
    const double inv_w2 = 1.0 / (w * w);
    // |K''| peaks at the origin: h/w^2, against 2 e^{-3/2} h/w^2 at x^2 = 3 w^2.
    return {"gaussian_bump",
            [h, inv_w2](double x) { return h * std::exp(-0.5 * x * x * inv_w2); },
            [h, inv_w2](double x) { return -h * x * inv_w2 * std::exp(-0.5 * x * x * inv_w2); },
            [h, inv_w2](double x) {
              return h * (x * x * inv_w2 - 1.0) * inv_w2 * std::exp(-0.5 * x * x * inv_w2);
            },
            std::abs(h) * inv_w2,
            true};
  }

  InteractionKernel operator()(const kernel::Symmetrized& s) const {
    if (!s.inner) throw ConfigError("symmetrized kernel needs an inner descriptor");
    auto inner = std::make_shared<const InteractionKernel>(builtin_kernel(*s.inner));
    std::optional<QuadraticCoefficients> quadratic;
    if (inner->quadratic()) quadratic = QuadraticCoefficients{inner->quadratic()->a, 0.0};
    return {"symmetrized(" + inner->name() + ")",
            [inner](double x) { return 0.5 * (inner->evaluate(x) + inner->evaluate(-x)); },
            [inner](double x) { return 0.5 * (inner->d1(x) - inner->d1(-x)); },
            [inner](double x) { return 0.5 * (inner->d2(x) + inner->d2(-x)); },
            inner->d2_sup(),
            true,
            quadratic};
  }
};

}  // namespace

InteractionKernel builtin_kernel(const KernelDescriptor& descriptor) {
  return std::visit(KernelBuilder{}, descriptor);
}

KernelDescriptor symmetrized(KernelDescriptor inner) {
  return kernel::Symmetrized{std::make_shared<const KernelDescriptor>(std::move(inner))};
}

ModelParams make_model_params(double gamma, double lambda, InteractionKernel kernel) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("gamma must be a finite positive number");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a finite nonnegative number");
  }
  return ModelParams{gamma, lambda, std::move(kernel)};
}

double smallness_threshold(double gamma, double d2_sup) {
  const double bound = std::min(gamma, 1.0 / gamma) / 8.0;
  if (d2_sup == 0.0) return std::numeric_limits<double>::infinity();
  return bound / d2_sup;
}

bool smallness_holds(const ModelParams& params) {
  return params.lambda * params.kernel.d2_sup() <=
         std::min(params.gamma, 1.0 / params.gamma) / 8.0;
}

CouplingConstants coupling_constants(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("gamma must be a finite positive number");
  }
  CouplingConstants c;
  c.a = std::min(gamma, 1.0 / gamma) / 2.0;
  c.b = 1.0 + c.a * c.a - c.a * gamma;
  c.M << 1.0, -c.a, -c.a, c.b + c.a * c.a;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c.M);
  const Eigen::Vector2d inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  c.A = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  c.A = 0.5 * (c.A + c.A.transpose()).eval();
  return c;
}

double norm_equivalence_ratio(const CouplingConstants& c) {
  const double two_a2 = 2.0 * c.a * c.a;
  return std::max(2.0, c.b + two_a2) / std::min(0.5, c.b / (1.0 + two_a2));
}

double mean_field_force(const ModelParams& params, double x, const WeightedSamples& marginal) {
  if (marginal.points.size() != marginal.weights.size()) {
    throw ContractViolation("marginal points and weights differ in length");
  }
  const double total = std::accumulate(marginal.weights.begin(), marginal.weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-10) {
    throw ContractViolation("marginal weights sum to " + std::to_string(total) + ", not 1");
  }
  if (params.lambda == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < marginal.points.size(); ++j) {
    acc += marginal.weights[j] * params.kernel.d1(x - marginal.points[j]);
  }
  return -params.lambda * acc;
}

}  // namespace vfp
