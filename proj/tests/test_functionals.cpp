#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "support.hpp"
#include "vfp/errors.hpp"
#include "vfp/functionals.hpp"
#include "vfp/gaussian.hpp"
#include "vfp/pde.hpp"

using namespace vfp;
using namespace vfp::test;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

GaussianState gaussian(double mx, double mv, double sxx = 1.0, double sxv = 0.0, double svv = 1.0) {
  GaussianState g;
  g.mean << mx, mv;
  g.cov << sxx, sxv, sxv, svv;
  return g;
}

PhaseGrid random_density(const GridShape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const double mx = u(rng), mv = u(rng), c = u(rng), e = u(rng);
  return sample_density(shape, [&](double x, double v) {
    const double base = std::exp(-0.5 * (x - mx) * (x - mx) * (1.0 + e) - 0.5 * (v - mv) * (v - mv) + c * x * v);
    return base * (1.0 + 0.5 * std::sin(2.0 * x + 3.0 * c) * std::cos(v));
  });
}

std::vector<Point2> gaussian_cloud(std::mt19937_64& rng, std::size_t n, const GaussianState& g) {
  const Eigen::Matrix2d L = g.cov.llt().matrixL();
  std::normal_distribution<double> z;
  std::vector<Point2> out(n);
  for (auto& p : out) {
    const Eigen::Vector2d s = g.mean + L * Eigen::Vector2d(z(rng), z(rng));
    p = {s(0), s(1)};
  }
  return out;
}

}  // namespace

TEST_CASE("entropy of Gaussians") {
  const GridShape shape;
  CHECK(std::abs(entropy(gaussian_grid(shape, gaussian(0.0, 0.0))) + 1.0 + kLog2Pi) < 1e-4);
  const auto narrow = gaussian(0.3, -0.2, 0.25, 0.0, 1.0);
  const double exact = -(1.0 + kLog2Pi + 0.5 * std::log(0.25));
  CHECK(std::abs(entropy(gaussian_grid(shape, narrow)) - exact) < 1e-4);
  CHECK(gaussian_entropy(narrow) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("entropy of a uniform density") {
  const GridShape shape{4.0, 4.0, 40, 40};
  const auto f = sample_density(shape, [](double x, double v) {
    return (std::abs(x) < 1.0 && std::abs(v) < 1.0) ? 1.0 : 0.0;
  });
  CHECK(std::abs(entropy(f) + std::log(4.0)) < 1e-12);
}

TEST_CASE("classical free energy") {
  const GridShape shape;
  const auto std_normal = gaussian_grid(shape, gaussian(0.0, 0.0));
  CHECK(std::abs(classical_free_energy(std_normal, zero_params()) - (-(1.0 + kLog2Pi) + 1.0)) < 1e-4);

  const auto g = gaussian(0.7, -0.4, 0.6, 0.2, 1.3);
  const auto f = gaussian_grid(shape, g);
  for (const KernelDescriptor& d : {KernelDescriptor{kernel::Sine{1.0}}, KernelDescriptor{kernel::QuadraticLinear{0.5, 2.0}},
                                    KernelDescriptor{kernel::GaussianBump{1.0, 0.5}}}) {
    const double plain = classical_free_energy(f, params(1.0, 0.8, d));
    const double sym = classical_free_energy(f, params(1.0, 0.8, symmetrized(d)));
    CHECK(std::abs(plain - sym) <= 1e-12);
  }

  const auto p = quadratic_params(0.5, 2.0, 0.8);
  CHECK(std::abs(classical_free_energy(f, p) - classical_free_energy_gaussian(g, p)) < 1e-4);
}

TEST_CASE("mean-field free energy matches the Gaussian closed form") {
  const GridShape shape;
  for (const auto& g : {gaussian(0.0, 0.0), gaussian(1.0, 0.5, 0.7, 0.1, 1.2), gaussian(-2.0, 1.0, 0.4, -0.2, 0.9)}) {
    const auto f = gaussian_grid(shape, g);
    const auto p = quadratic_params(1.0, 1.0);
    CHECK(std::abs(mean_field_free_energy(f, p) - free_energy_quadratic(g, p)) < 1e-4);
  }
  CHECK_THROWS_AS(mean_field_free_energy(gaussian_grid(shape, gaussian(0.0, 0.0)), sine_boundary(1.0)),
                  ContractViolation);
}

TEST_CASE("local equilibrium: K = 0") {
  const GridShape shape;
  const auto f = gaussian_grid(shape, gaussian(1.0, -1.0, 0.5, 0.1, 2.0));
  const auto eq = local_equilibrium(f, zero_params());
  CHECK(std::abs(eq.Z - 2.0 * std::numbers::pi) < 1e-10);
  CHECK(std::abs(eq.grid.mass() - 1.0) < 1e-10);
  const auto ref = gaussian_grid(shape, gaussian(0.0, 0.0));
  CHECK(max_abs_diff(eq.grid.data, ref.data) < 1e-12);
}

TEST_CASE("local equilibrium: quadratic kernel") {
  const GridShape shape;
  const double a = 0.5, b = 1.0, lam = 0.7;
  const auto f = gaussian_grid(shape, gaussian(0.8, 0.0, 0.6));
  const auto eq = local_equilibrium(f, quadratic_params(a, b, lam));
  const double m = grid_moments(f).mean(0);
  CHECK(std::abs(eq.grid.mass() - 1.0) < 1e-10);

  // ln f_hat - (analytic exponent) is one constant over the grid.
  std::vector<double> offsets;
  for (std::size_t i = 0; i < shape.nx; i += 7) {
    const double x = shape.x(i);
    offsets.push_back(eq.log_x[i] - (-(1.0 + 2.0 * lam * a) * x * x / 2.0 + (2.0 * lam * a * m - lam * b) * x));
  }
  for (double c : offsets) CHECK(std::abs(c - offsets.front()) < 1e-9);

  // Factorization on random cell pairs.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> ix(0, shape.nx - 1), iv(0, shape.nv - 1);
  for (int n = 0; n < 50; ++n) {
    const std::size_t i = ix(rng), j = ix(rng), k = iv(rng), l = iv(rng);
    const double lhs = eq.grid.at(i, k) * eq.grid.at(j, l);
    const double rhs = eq.grid.at(i, l) * eq.grid.at(j, k);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(lhs, 1e-300));
    CHECK(std::abs(eq.log_value(i, k) - std::log(eq.grid.at(i, k))) < 1e-9);
  }
}

TEST_CASE("Fisher information") {
  const GridShape shape;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const auto c = coupling_constants(1.0);
  const auto f0 = gaussian_grid(shape, gaussian(0.0, 0.0));
  CHECK(fisher_information(f0, zero_params(), I) < 1e-8);
  CHECK(fisher_information(f0, zero_params(), c.A) < 1e-8);

  const double delta = 0.7;
  const auto shifted = gaussian_grid(shape, gaussian(delta, 0.0));
  CHECK(std::abs(fisher_information(shifted, zero_params(), I) - delta * delta) < 1e-4);
  const double expected = delta * delta * c.M.inverse()(0, 0);
  CHECK(std::abs(fisher_information(shifted, zero_params(), c.A) - expected) < 1e-4);
}

TEST_CASE("Fisher information: matrix sandwich and zero set") {
  const GridShape shape{8.0, 8.0, 64, 64};
  std::mt19937_64 rng(11);
  const auto p = sine_boundary(1.0);
  for (double gamma : {0.5, 1.0, 3.0}) {
    const Eigen::Matrix2d A = coupling_constants(gamma).A;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(A.transpose() * A);
    for (int n = 0; n < 5; ++n) {
      const auto f = random_density(shape, rng);
      const double ii = fisher_information(f, p, Eigen::Matrix2d::Identity());
      const double ia = fisher_information(f, p, A);
      CHECK(ia >= eig.eigenvalues()(0) * ii * (1.0 - 1e-12));
      CHECK(ia <= eig.eigenvalues()(1) * ii * (1.0 + 1e-12));
      CHECK(ii > 1e-4);
    }
  }
  const auto fstar = stationary_fixed_point(p, shape).grid;
  CHECK(fisher_information(fstar, p, Eigen::Matrix2d::Identity()) < 1e-8);
}

TEST_CASE("relative entropy") {
  const GridShape shape;
  const auto f = gaussian_grid(shape, gaussian(0.0, 0.0));
  CHECK(relative_entropy(f, f) == 0.0);
  const double delta = 0.6;
  const auto g = gaussian_grid(shape, gaussian(delta, 0.0));
  CHECK(std::abs(relative_entropy(g, f) - delta * delta / 2.0) < 1e-4);

  std::mt19937_64 rng(5);
  const GridShape small{6.0, 6.0, 48, 48};
  for (int n = 0; n < 10; ++n) {
    const auto a = random_density(small, rng);
    const auto b = random_density(small, rng);
    const double h = relative_entropy(a, b);
    const double l1 = l1_distance(a, b);
    CHECK(h >= -1e-10);
    CHECK(l1 * l1 <= 2.0 * h);
  }

  auto hole = f;
  hole.at(64, 64) = 0.0;
  CHECK_THROWS_AS(relative_entropy(f, hole), SupportError);
  CHECK_NOTHROW(relative_entropy(hole, f));
}

TEST_CASE("l1 distance and moments") {
  const GridShape shape{2.0, 2.0, 4, 4};
  auto a = make_grid(shape);
  auto b = make_grid(shape);
  a.at(0, 0) = 1.0;
  b.at(3, 3) = 1.0;
  CHECK(l1_distance(a, b) == 2.0);
  CHECK(l1_distance(a, a) == 0.0);

  const auto g = gaussian(0.4, -0.3, 0.8, 0.25, 1.1);
  const auto m = grid_moments(gaussian_grid(GridShape{}, g));
  CHECK((m.mean - g.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.cov - g.cov).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("empirical W2: exact cases") {
  std::mt19937_64 rng(21);
  const auto a = gaussian_cloud(rng, 300, gaussian(0.0, 0.0));
  CHECK(w2_empirical(a, a) == 0.0);
  auto b = a;
  for (auto& p : b) {
    p.x += 0.75;
    p.v -= 1.25;
  }
  CHECK(std::abs(w2_empirical(a, b) - std::hypot(0.75, 1.25)) < 1e-12);

  const auto shorter = gaussian_cloud(rng, 299, gaussian(0.0, 0.0));
  CHECK_THROWS_AS(w2_empirical(a, shorter), ContractViolation);
  std::vector<Point2> huge(4097);
  CHECK_THROWS_AS(w2_empirical(huge, huge), ContractViolation);
}

TEST_CASE("empirical W2 is a metric") {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 10; ++n) {
    const auto a = gaussian_cloud(rng, 64, gaussian(0.0, 0.0));
    const auto b = gaussian_cloud(rng, 64, gaussian(0.5, 0.0, 2.0));
    const auto c = gaussian_cloud(rng, 64, gaussian(0.0, -1.0, 1.0, 0.3, 0.5));
    const double ab = w2_empirical(a, b), ba = w2_empirical(b, a);
    CHECK(ab == ba);
    CHECK(w2_empirical(a, c) <= ab + w2_empirical(b, c) + 1e-10);
  }
}

TEST_CASE("empirical W2 against the Bures formula") {
  std::mt19937_64 rng(13);
  const std::size_t n = 512;
  const auto g1 = gaussian(0.0, 0.0, 1.0, 0.2, 0.8);
  const auto g2 = gaussian(1.0, -0.5, 2.0, -0.4, 0.7);
  const double tol = 5.0 * std::pow(static_cast<double>(n), -0.25);
  CHECK(std::abs(w2_empirical(gaussian_cloud(rng, n, g1), gaussian_cloud(rng, n, g2)) - bures_w2(g1, g2)) < tol);
}

TEST_CASE("grid W2") {
  const GridShape shape{8.0, 8.0, 64, 64};
  const auto f = gaussian_grid(shape, gaussian(0.0, 0.0));
  CHECK(w2_grid(f, f, 3, 256) == 0.0);

  // A shift by a whole number of cells moves every sample by the same vector.
  const double shift = 4.0 * shape.dx();
  const auto g = gaussian_grid(shape, gaussian(shift, 0.0));
  CHECK(std::abs(w2_grid(f, g, 3, 256) - shift) < 1e-6);

  const auto h = gaussian_grid(shape, gaussian(-0.5, 0.5, 0.5, 0.0, 2.0));
  const double tol = 5.0 * std::pow(512.0, -0.25);
  CHECK(std::abs(w2_grid(f, h, 4, 512) - bures_w2(gaussian(0.0, 0.0), gaussian(-0.5, 0.5, 0.5, 0.0, 2.0))) < tol);
}

TEST_CASE("grid sampling is reproducible and follows the density") {
  const GridShape shape{8.0, 8.0, 64, 64};
  const auto g = gaussian(1.0, -0.5, 0.5, 0.1, 1.5);
  const auto f = gaussian_grid(shape, g);
  const auto a = sample_grid(f, 4000, 9);
  const auto b = sample_grid(f, 4000, 9);
  double mx = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].v == b[i].v);
    mx += a[i].x;
    mv += a[i].v;
  }
  mx /= 4000.0;
  mv /= 4000.0;
  CHECK(std::abs(mx - 1.0) < 3.0 * std::sqrt(0.5 / 4000.0));
  CHECK(std::abs(mv + 0.5) < 3.0 * std::sqrt(1.5 / 4000.0));
}

TEST_CASE("classical free energy decays for an even kernel") {
  const auto p = params(1.0, 0.125, symmetrized(kernel::Sine{1.0}));
  GridConfig cfg;
  cfg.nx = cfg.nv = 64;
  VfpSolver solver(p, cfg);
  PhaseGrid f = gaussian_grid(cfg.shape(), gaussian(1.5, -1.0, 0.5, 0.0, 1.5));
  double previous = classical_free_energy(f, p);
  double rise = -INFINITY;
  solver.advance(f, 4.0, 0.05, [&](const PhaseGrid& g) {
    const double e = classical_free_energy(g, p);
    if (g.t > 0.0) rise = std::max(rise, e - previous);
    previous = e;
  });
  CHECK(rise <= 1e-10);
}
