#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vfp/model.hpp"

namespace vfp::test {

inline ModelParams params(double gamma, double lambda, KernelDescriptor d) {
  return make_model_params(gamma, lambda, builtin_kernel(d));
}

inline ModelParams zero_params(double gamma = 1.0) { return params(gamma, 0.0, kernel::Zero{}); }

inline ModelParams quadratic_params(double a, double b, double lambda = 1.0, double gamma = 1.0) {
  return params(gamma, lambda, kernel::QuadraticLinear{a, b});
}

/// Sine kernel with lambda on the smallness boundary.
inline ModelParams sine_boundary(double gamma) {
  return params(gamma, smallness_threshold(gamma, 1.0), kernel::Sine{1.0});
}

inline std::vector<double> normals(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace vfp::test
