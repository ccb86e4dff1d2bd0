#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "support.hpp"
#include "vfp/errors.hpp"
#include "vfp/model.hpp"

using namespace vfp;
using vfp::test::params;

TEST_CASE("quadratic-linear kernel values") {
  const auto k = builtin_kernel(kernel::QuadraticLinear{1.0, 2.0});
  CHECK(k.evaluate(1.0) == 3.0);
  CHECK(k.d1(1.0) == 4.0);
  CHECK(k.d2(1.0) == 2.0);
  CHECK(k.d2_sup() == 2.0);
  CHECK_FALSE(k.is_even());
  REQUIRE(k.quadratic());
  CHECK(k.quadratic()->a == 1.0);
  CHECK(k.quadratic()->b == 2.0);
}

TEST_CASE("sine kernel bound and parity") {
  const auto k = builtin_kernel(kernel::Sine{1.0});
  CHECK(k.d2_sup() == 1.0);
  CHECK_FALSE(k.is_even());
  CHECK(builtin_kernel(kernel::Sine{-3.0}).d2_sup() == 3.0);
}

TEST_CASE("zero kernel") {
  const auto k = builtin_kernel(kernel::Zero{});
  CHECK(k.d2_sup() == 0.0);
  CHECK(k.is_even());
  CHECK(k.evaluate(2.5) == 0.0);
  CHECK(k.d1(-1.0) == 0.0);
}

TEST_CASE("symmetrizing removes the odd part") {
  const auto k = builtin_kernel(symmetrized(kernel::QuadraticLinear{0.0, 5.0}));
  for (double x : {-3.0, -0.5, 0.0, 0.25, 7.0}) {
    CHECK(k.evaluate(x) == 0.0);
    CHECK(k.d1(x) == 0.0);
  }
  CHECK(k.is_even());

  const auto s = builtin_kernel(symmetrized(kernel::Sine{1.0}));
  CHECK(s.evaluate(1.3) == 0.0);
  CHECK(s.d2_sup() == 1.0);
}

TEST_CASE("kernel bounds and derivative consistency on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const std::vector<KernelDescriptor> all = {
      kernel::Zero{},
      kernel::QuadraticLinear{0.7, -1.2},
      kernel::Sine{1.5},
      kernel::GaussianBump{2.0, 0.8},
      symmetrized(kernel::Sine{1.0}),
      symmetrized(kernel::GaussianBump{-1.0, 1.3}),
  };
  for (const auto& d : all) {
    const auto k = builtin_kernel(d);
    CAPTURE(k.name());
    for (int n = 0; n < 500; ++n) {
      const double x = u(rng);
      CHECK(std::abs(k.d2(x)) <= k.d2_sup() * (1.0 + 1e-15));
      const double h = 1e-4;
      const double fd = (k.d1(x + h) - k.d1(x - h)) / (2.0 * h);
      CHECK(std::abs(fd - k.d2(x)) <= 1e-6 * (1.0 + k.d2_sup()));
      const double fd1 = (k.evaluate(x + h) - k.evaluate(x - h)) / (2.0 * h);
      CHECK(std::abs(fd1 - k.d1(x)) <= 1e-6 * (1.0 + std::abs(k.evaluate(x))));
    }
  }
}

TEST_CASE("gaussian bump bound is attained at the origin") {
  const auto k = builtin_kernel(kernel::GaussianBump{3.0, 0.5});
  CHECK(k.d2_sup() == doctest::Approx(12.0));
  CHECK(std::abs(k.d2(0.0)) == doctest::Approx(12.0));
}

TEST_CASE("invalid kernel parameters") {
  CHECK_THROWS_AS(builtin_kernel(kernel::GaussianBump{1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(builtin_kernel(kernel::Sine{std::nan("")}), ConfigError);
  CHECK_THROWS_AS(InteractionKernel("custom", [](double) { return 0.0; }, [](double) { return 0.0; },
                                    [](double) { return 0.0; }, -1.0, true),
                  ConfigError);
}

TEST_CASE("model parameter validation") {
  const auto k = builtin_kernel(kernel::Zero{});
  CHECK_THROWS_AS(make_model_params(0.0, 0.0, k), ConfigError);
  CHECK_THROWS_AS(make_model_params(-1.0, 0.0, k), ConfigError);
  CHECK_THROWS_AS(make_model_params(1.0, -0.1, k), ConfigError);
  CHECK_THROWS_AS(make_model_params(1.0, INFINITY, k), ConfigError);
  CHECK_NOTHROW(make_model_params(2.0, 0.0, k));
}

TEST_CASE("smallness predicate") {
  CHECK(smallness_holds(params(1.0, 0.125, kernel::Sine{1.0})));
  CHECK_FALSE(smallness_holds(params(1.0, 0.2, kernel::Sine{1.0})));
  for (double gamma : {0.1, 1.0, 10.0}) CHECK(smallness_holds(params(gamma, 0.0, kernel::Zero{})));
  CHECK(smallness_holds(params(4.0, 1e6, kernel::Zero{})));

  // Boundary lambda from the threshold helper.
  for (double gamma : {0.25, 0.5, 1.0, 2.0, 3.0}) {
    const double lam = smallness_threshold(gamma, 1.0);
    CHECK(smallness_holds(params(gamma, lam, kernel::Sine{1.0})));
    CHECK_FALSE(smallness_holds(params(gamma, lam * (1.0 + 1e-12), kernel::Sine{1.0})));
  }
  CHECK(std::isinf(smallness_threshold(1.0, 0.0)));
}

TEST_CASE("smallness is monotone in lambda") {
  for (double gamma : {0.3, 1.0, 5.0}) {
    bool seen_true = false;
    for (int n = 40; n >= 0; --n) {
      const double lam = 0.01 * n;
      const bool holds = smallness_holds(params(gamma, lam, kernel::Sine{1.0}));
      if (seen_true) CHECK(holds);
      seen_true = seen_true || holds;
    }
  }
}

TEST_CASE("coupling constants at gamma = 1") {
  const auto c = coupling_constants(1.0);
  CHECK(c.a == 0.5);
  CHECK(c.b == 0.75);
  CHECK(c.M(0, 0) == 1.0);
  CHECK(c.M(0, 1) == -0.5);
  CHECK(c.M(1, 0) == -0.5);
  CHECK(c.M(1, 1) == 1.0);
  CHECK(c.M.determinant() == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("coupling constants at gamma = 2") {
  const auto c = coupling_constants(2.0);
  CHECK(c.a == 0.25);
  CHECK(c.b == 0.5625);
  CHECK(c.M(0, 1) == -0.25);
  CHECK(c.M(1, 1) == 0.625);
  CHECK(std::abs(c.M.determinant() - c.b) < 1e-14);
}

TEST_CASE("coupling constant invariants on a log grid") {
  for (int e = -4; e <= 4; ++e) {
    const double gamma = std::ldexp(1.0, e);
    const auto c = coupling_constants(gamma);
    CAPTURE(gamma);
    CHECK(c.a == doctest::Approx(std::min(gamma, 1.0 / gamma) / 2.0));
    CHECK(c.b >= 0.5);
    CHECK(c.b <= 1.25);
    CHECK(std::abs(c.M.determinant() - c.b) < 1e-12);
    CHECK((c.A - c.A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::Matrix2d prod = c.A * c.A * c.M;
    CHECK((prod - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(norm_equivalence_ratio(c) - 4.0) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c.A);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("mean-field force") {
  const std::vector<double> pts = {-1.0, 0.5, 2.0};
  const std::vector<double> w = {0.2, 0.5, 0.3};
  const WeightedSamples marginal{pts, w};

  CHECK(mean_field_force(params(1.0, 2.0, kernel::Zero{}), 0.3, marginal) == 0.0);

  const double a = 0.7, b = -0.4, lam = 1.3;
  const auto p = params(1.0, lam, kernel::QuadraticLinear{a, b});
  const double m = 0.2 * -1.0 + 0.5 * 0.5 + 0.3 * 2.0;
  for (double x : {-2.0, 0.0, 1.7}) {
    CHECK(std::abs(mean_field_force(p, x, marginal) + lam * (2.0 * a * (x - m) + b)) < 1e-10);
  }

  const std::vector<double> origin = {0.0};
  const std::vector<double> one = {1.0};
  CHECK(std::abs(mean_field_force(params(1.0, 0.7, kernel::Sine{1.0}), std::numbers::pi / 2.0,
                                  WeightedSamples{origin, one})) < 1e-15);
}

TEST_CASE("mean-field force rejects unnormalized marginals") {
  const std::vector<double> pts = {0.0, 1.0};
  const std::vector<double> w = {0.5, 0.49};
  CHECK_THROWS_AS(mean_field_force(params(1.0, 1.0, kernel::Sine{1.0}), 0.0, WeightedSamples{pts, w}),
                  ContractViolation);
}
