#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "support.hpp"
#include "vfp/errors.hpp"
#include "vfp/particles.hpp"
#include "vfp/rng.hpp"

using namespace vfp;
using namespace vfp::test;

namespace {

ParticleState state_of(std::vector<double> x, std::vector<double> v) {
  ParticleState s;
  s.x = std::move(x);
  s.v = std::move(v);
  return s;
}

/// Quadratic-linear kernel without the O(N) shortcut, so forces go through
/// the direct double sum.
InteractionKernel opaque_quadratic(double a, double b) {
  return InteractionKernel(
      "opaque", [a, b](double x) { return a * x * x + b * x; }, [a, b](double x) { return 2.0 * a * x + b; },
      [a](double) { return 2.0 * a; }, 2.0 * std::abs(a), false);
}

ParticleState run(ParticleState s, const ModelParams& p, const SimConfig& cfg, double horizon, bool noiseless) {
  const auto steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
  const std::vector<double> zeros(s.size(), 0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    s = noiseless ? step(s, p, cfg, zeros) : step(s, p, cfg, dynamics_noise(cfg.seed, s.step_index, s.size()));
  }
  return s;
}

Eigen::Vector2d damped_oscillator(double gamma, double t, Eigen::Vector2d z0) {
  Eigen::Matrix2d B;
  B << 0.0, 1.0, -1.0, -gamma;
  return (B * t).exp() * z0;
}

}  // namespace

TEST_CASE("pairwise force: sine kernel, two particles") {
  const std::vector<double> x = {0.0, std::numbers::pi};
  const auto f = pairwise_force(params(1.0, 1.0, kernel::Sine{1.0}), x);
  CHECK(f[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("pairwise force: zero kernel") {
  std::mt19937_64 rng(1);
  const auto x = normals(rng, 17);
  for (double f : pairwise_force(zero_params(), x)) CHECK(f == 0.0);
}

TEST_CASE("pairwise force: quadratic shortcut matches the direct sum") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {2u, 3u, 10u, 101u}) {
    const auto x = normals(rng, n, 3.0);
    const double a = 0.8, b = -1.7;
    const auto fast = pairwise_force(quadratic_params(a, b), x);
    const auto direct = pairwise_force(make_model_params(1.0, 1.0, opaque_quadratic(a, b)), x);
    CHECK(max_abs_diff(fast, direct) < 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      double others = 0.0;
      for (std::size_t j = 0; j < n; ++j) others += j == i ? 0.0 : x[j];
      const double mean = others / static_cast<double>(n - 1);
      CHECK(std::abs(fast[i] - (2.0 * a * (x[i] - mean) + b)) < 1e-12);
    }
  }
}

TEST_CASE("pairwise force needs two particles") {
  const std::vector<double> one = {0.0};
  CHECK_THROWS_AS(pairwise_force(zero_params(), one), ContractViolation);
}

TEST_CASE("symmetrized even kernel reproduces the forces") {
  std::mt19937_64 rng(3);
  const auto x = normals(rng, 40, 2.0);
  const auto plain = pairwise_force(params(1.0, 1.0, kernel::GaussianBump{1.5, 0.7}), x);
  const auto sym = pairwise_force(params(1.0, 1.0, symmetrized(kernel::GaussianBump{1.5, 0.7})), x);
  CHECK(max_abs_diff(plain, sym) < 1e-12);
}

TEST_CASE("force Jacobian bound") {
  std::mt19937_64 rng(4);
  {
    const auto x = normals(rng, 8);
    auto u = normals(rng, 8);
    const auto [measured, bound] = force_jacobian_norm_bound_check(zero_params(), x, u);
    CHECK(measured == 0.0);
    CHECK(bound == 0.0);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = normals(rng, 8, 3.0);
    auto u = normals(rng, 8);
    double norm = 0.0;
    for (double c : u) norm += c * c;
    for (double& c : u) c /= std::sqrt(norm);
    const auto [sine, sine_bound] = force_jacobian_norm_bound_check(params(1.0, 1.0, kernel::Sine{1.0}), x, u);
    CHECK(sine_bound == 2.0);
    CHECK(sine <= sine_bound + 1e-6);
    const auto [quad, quad_bound] = force_jacobian_norm_bound_check(quadratic_params(1.0, 0.0), x, u);
    CHECK(quad_bound == 4.0);
    CHECK(quad <= quad_bound + 1e-6);
  }
}

TEST_CASE("noiseless single particle follows the damped oscillator") {
  const Eigen::Vector2d exact = damped_oscillator(1.0, 1.0, {1.0, 0.0});
  for (Integrator integ : {Integrator::euler_maruyama, Integrator::kinetic_splitting}) {
    double errors[2];
    for (int level = 0; level < 2; ++level) {
      SimConfig cfg;
      cfg.integrator = integ;
      cfg.dt = level == 0 ? 2e-3 : 1e-3;
      // Two copies of the same particle; lambda = 0 leaves them independent.
      const auto s = run(state_of({1.0, 1.0}, {0.0, 0.0}), zero_params(), cfg, 1.0, true);
      errors[level] = std::hypot(s.x[0] - exact(0), s.v[0] - exact(1));
      CHECK(s.x[0] == s.x[1]);
      CHECK(s.t == doctest::Approx(1.0));
    }
    CAPTURE(static_cast<int>(integ));
    CHECK(errors[1] < 5e-3);
    CHECK(errors[1] <= errors[0]);
  }
}

TEST_CASE("origin is a fixed point without noise") {
  for (Integrator integ : {Integrator::euler_maruyama, Integrator::kinetic_splitting}) {
    SimConfig cfg;
    cfg.integrator = integ;
    const auto s = run(state_of({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}), zero_params(), cfg, 0.5, true);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s.x[i] == 0.0);
      CHECK(s.v[i] == 0.0);
    }
  }
}

TEST_CASE("trajectories are reproducible") {
  SimConfig cfg;
  cfg.seed = 99;
  const auto p = params(0.7, 0.1, kernel::Sine{1.0});
  const auto init = sample_initial_state(5, streams::kInitial, 16, 0.0, 1.0, 0.0, 1.0);
  const auto a = run(init, p, cfg, 0.3, false);
  const auto b = run(init, p, cfg, 0.3, false);
  CHECK(a.x == b.x);
  CHECK(a.v == b.v);
  cfg.seed = 100;
  const auto c = run(init, p, cfg, 0.3, false);
  CHECK(a.x != c.x);
}

TEST_CASE("step rejects mismatched noise and reports divergence") {
  SimConfig cfg;
  const auto s = state_of({0.0, 1.0}, {0.0, 0.0});
  const std::vector<double> short_noise = {0.0};
  CHECK_THROWS_AS(step(s, zero_params(), cfg, short_noise), ContractViolation);

  cfg.integrator = Integrator::euler_maruyama;
  cfg.dt = 1.0;
  const auto huge = state_of({1e308, 1e308}, {1e308, 1e308});
  const std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(step(huge, zero_params(), cfg, zeros), DivergenceError);
}

TEST_CASE("invalid configurations") {
  SimConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(validate_sim_config(cfg), ConfigError);
  CHECK_THROWS_AS(validate_state(state_of({0.0}, {0.0})), ContractViolation);
  CHECK_THROWS_AS(validate_state(state_of({0.0, 1.0}, {0.0})), ContractViolation);
  CHECK_THROWS_AS(validate_state(state_of({0.0, NAN}, {0.0, 0.0})), ContractViolation);
}

TEST_CASE("modified norm arithmetic") {
  const auto c = coupling_constants(1.0);
  CoupledPair pair{state_of({0.0, 0.0}, {0.0, 0.0}), state_of({0.0, 0.0}, {0.0, 0.0})};
  CHECK(modified_norm_sq(pair, c) == 0.0);
  CHECK(euclid_sq(pair) == 0.0);

  pair.z_tilde.x[0] = -1.0;
  CHECK(modified_norm_sq(pair, c) == doctest::Approx(1.0));

  pair.z_tilde.x[0] = 0.0;
  pair.z_tilde.v[1] = -2.0;
  CHECK(modified_norm_sq(pair, c) == doctest::Approx(4.0));
  CHECK(euclid_sq(pair) == 4.0);
}

TEST_CASE("synchronously coupled identical states stay identical") {
  SimConfig cfg;
  const auto p = params(1.0, 0.125, kernel::Sine{1.0});
  const auto s = sample_initial_state(1, streams::kInitial, 8, 0.0, 1.0, 0.0, 1.0);
  CoupledPair pair{s, s};
  for (int n = 0; n < 500; ++n) pair = coupled_step(pair, p, cfg, dynamics_noise(3, pair.z.step_index, 8));
  CHECK(pair.z.x == pair.z_tilde.x);
  CHECK(pair.z.v == pair.z_tilde.v);
}

TEST_CASE("zero kernel: coupled difference is a deterministic linear flow") {
  SimConfig cfg;
  cfg.dt = 1e-3;
  const auto c = coupling_constants(1.0);
  CoupledPair pair{sample_initial_state(1, streams::kInitial, 4, 0.0, 1.0, 0.0, 1.0),
                   sample_initial_state(1, streams::kInitialTilde, 4, 1.0, 1.0, 0.0, 1.0)};
  std::vector<Eigen::Vector2d> d0(4);
  for (std::size_t i = 0; i < 4; ++i) d0[i] = {pair.z.x[i] - pair.z_tilde.x[i], pair.z.v[i] - pair.z_tilde.v[i]};

  double previous = modified_norm_sq(pair, c);
  for (int n = 1; n <= 2000; ++n) {
    pair = coupled_step(pair, zero_params(), cfg, dynamics_noise(8, pair.z.step_index, 4));
    const double now = modified_norm_sq(pair, c);
    CHECK(now <= previous * (1.0 + 1e-12));
    previous = now;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const Eigen::Vector2d exact = damped_oscillator(1.0, 2.0, d0[i]);
    CHECK(std::abs(pair.z.x[i] - pair.z_tilde.x[i] - exact(0)) < 1e-3 * (1.0 + d0[i].norm()));
    CHECK(std::abs(pair.z.v[i] - pair.z_tilde.v[i] - exact(1)) < 1e-3 * (1.0 + d0[i].norm()));
  }
}

TEST_CASE("modified norm contracts at rate a/4 under the smallness condition") {
  for (double gamma : {0.5, 1.0, 2.0}) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    const auto p = sine_boundary(gamma);
    const auto c = coupling_constants(gamma);
    CoupledPair pair{sample_initial_state(11, streams::kInitial, 32, 0.0, 1.0, 0.0, 1.0),
                     sample_initial_state(11, streams::kInitialTilde, 32, 2.0, 1.5, -1.0, 1.5)};
    const double n0 = modified_norm_sq(pair, c);
    for (int n = 0; n < 1000; ++n) pair = coupled_step(pair, p, cfg, dynamics_noise(11, pair.z.step_index, 32));
    CAPTURE(gamma);
    CHECK(modified_norm_sq(pair, c) <= std::exp(-c.a / 4.0) * n0 * (1.0 + 10.0 * cfg.dt));
  }
}

TEST_CASE("contraction experiment: zero kernel") {
  SimConfig cfg;
  cfg.seed = 3;
  ContractionOptions opt;
  opt.n_particles = 16;
  opt.horizon = 8.0;
  opt.replicas = 4;
  opt.threads = 2;
  const auto report = contraction_experiment(zero_params(), cfg, opt);
  CHECK(report.smallness);
  CHECK(report.warnings.empty());
  CHECK(report.envelope_ok);
  CHECK(report.fitted_rate >= 0.125);
  CHECK(report.worst_euclid_ratio <= 1.05);
  CHECK(report.times.size() == 81);
  for (const auto& r : report.replicas) CHECK(r.modified_norm_sq.size() == report.times.size());
}

TEST_CASE("contraction experiment is independent of the thread count") {
  SimConfig cfg;
  cfg.seed = 21;
  ContractionOptions opt;
  opt.n_particles = 8;
  opt.horizon = 1.0;
  opt.replicas = 5;
  const auto p = sine_boundary(1.0);
  opt.threads = 1;
  const auto one = contraction_experiment(p, cfg, opt);
  opt.threads = 3;
  const auto three = contraction_experiment(p, cfg, opt);
  for (std::size_t r = 0; r < opt.replicas; ++r) {
    CHECK(one.replicas[r].modified_norm_sq == three.replicas[r].modified_norm_sq);
    CHECK(one.replicas[r].euclid_sq == three.replicas[r].euclid_sq);
  }
}

TEST_CASE("contraction experiment flags the non-guaranteed regime") {
  SimConfig cfg;
  ContractionOptions opt;
  opt.n_particles = 16;
  opt.horizon = 10.0;
  opt.replicas = 4;
  const auto p = params(1.0, 100.0 * smallness_threshold(1.0, 1.0), kernel::Sine{1.0});
  const auto report = contraction_experiment(p, cfg, opt);
  CHECK_FALSE(report.smallness);
  REQUIRE_FALSE(report.warnings.empty());
  CHECK(report.warnings.front().rfind("outside-guarantee", 0) == 0);
  CHECK(report.envelope_violations > 0);
  CHECK_FALSE(report.envelope_ok);
}

TEST_CASE("zero interaction: empirical second moments approach one") {
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.seed = 17;
  const std::size_t n = 4000;
  const auto s = run(sample_initial_state(2, streams::kInitial, n, 0.0, 2.0, 0.0, 0.5), zero_params(), cfg, 15.0, false);
  double xx = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xx += s.x[i] * s.x[i];
    vv += s.v[i] * s.v[i];
  }
  xx /= static_cast<double>(n);
  vv /= static_cast<double>(n);
  const double tol = 3.0 / std::sqrt(static_cast<double>(n)) + cfg.dt;
  CHECK(std::abs(xx - 1.0) < tol);
  CHECK(std::abs(vv - 1.0) < tol);
}

TEST_CASE("fitted decay rate recovers an exponential") {
  std::vector<double> t, y;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    y.push_back(3.0 * std::exp(-0.37 * t.back()));
  }
  CHECK(fitted_decay_rate(t, y, 2.5, 10.0) == doctest::Approx(0.37).epsilon(1e-10));
}
