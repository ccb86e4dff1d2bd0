#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vfp/model.hpp"

namespace vfp {

/// Positions and velocities of N particles plus the simulation clock.
struct ParticleState {
  std::vector<double> x;
  std::vector<double> v;
  double t = 0.0;
  std::uint64_t step_index = 0;

  std::size_t size() const noexcept { return x.size(); }
};

/// Throws ContractViolation unless N >= 2, |x| = |v| and all entries are finite.
void validate_state(const ParticleState& state);

/// Two replicas advanced with identical noise (synchronous coupling).
struct CoupledPair {
  ParticleState z;
  ParticleState z_tilde;
};

enum class Integrator { euler_maruyama, kinetic_splitting };

struct SimConfig {
  double dt = 1e-3;
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::kinetic_splitting;
};

void validate_sim_config(const SimConfig& cfg);

/// F_i(x) = (1/(N-1)) sum_{j != i} K'(x_i - x_j).
///
/// Kernels of the form a x^2 + b x are summed in O(N) through the identity
/// F_i = 2a (x_i - mean_{j != i} x_j) + b; all others by direct O(N^2)
/// summation in a fixed order.
std::vector<double> pairwise_force(const ModelParams& params, std::span<const double> x);

/// Returns (|grad F(x) u| by central differences with step h, 2 sup|K''|).
std::pair<double, double> force_jacobian_norm_bound_check(const ModelParams& params,
                                                          std::span<const double> x,
                                                          std::span<const double> u,
                                                          double h = 1e-5);

/// One step of the chosen integrator for
///   dX = V dt,  dV = -(X + gamma V + lambda F(X)) dt + sqrt(2 gamma) dB.
/// `noise` holds N standard normal draws. Throws DivergenceError if the new
/// state is not finite.
ParticleState step(const ParticleState& state, const ModelParams& params, const SimConfig& cfg,
                   std::span<const double> noise);

CoupledPair coupled_step(const CoupledPair& pair, const ModelParams& params, const SimConfig& cfg,
                         std::span<const double> noise);

/// |P|^2 + b |Q|^2 with P = dx + a dv, Q = dv.
double modified_norm_sq(const CoupledPair& pair, const CouplingConstants& constants);

/// |Z - Z~|^2 over all positions and velocities.
double euclid_sq(const CoupledPair& pair);

/// N standard normals for the given step, drawn from the counter-based stream
/// (seed, streams::kDynamics).
std::vector<double> dynamics_noise(std::uint64_t seed, std::uint64_t step_index, std::size_t n);

/// Initial state with x_i ~ N(mx, sx^2), v_i ~ N(mv, sv^2), drawn from the
/// counter-based stream (seed, stream).
ParticleState sample_initial_state(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                   double mx, double sx, double mv, double sv);

/// Advances `state` to `horizon`, calling `observe` after every `sample_every`
/// steps (and once at the start).
template <class Observer>
ParticleState simulate(ParticleState state, const ModelParams& params, const SimConfig& cfg,
                       double horizon, std::uint64_t sample_every, Observer&& observe) {
  const auto total = static_cast<std::uint64_t>(std::llround(horizon / cfg.dt));
  observe(state);
  for (std::uint64_t n = 0; n < total; ++n) {
    const auto noise = dynamics_noise(cfg.seed, state.step_index, state.size());
    state = step(state, params, cfg, noise);
    if (sample_every > 0 && (n + 1) % sample_every == 0) observe(state);
  }
  return state;
}

struct ContractionOptions {
  std::size_t n_particles = 64;
  double horizon = 20.0;
  std::size_t replicas = 16;
  double sample_every = 0.1;
  /// Worker threads for independent replicas (0 = hardware concurrency).
  unsigned threads = 0;
  /// Multiplicative slack on the pathwise modified-norm envelope is 1 + this * dt.
  double modified_slack_per_dt = 10.0;
  /// Multiplicative slack on the Euclidean envelope.
  double euclid_slack = 1.05;
};

struct ReplicaTrace {
  std::vector<double> modified_norm_sq;
  std::vector<double> euclid_sq;
  double fitted_rate_modified = 0.0;
  double fitted_rate_euclid = 0.0;
  /// max over sampled s < t of N(t) / (N(s) exp(-(a/4)(t-s))).
  double worst_modified_ratio = 0.0;
  /// max over sampled t of E(t) / (4 E(0) exp(-(a/4)t)).
  double worst_euclid_ratio = 0.0;
};

struct ContractionReport {
  double gamma = 0.0;
  double lambda = 0.0;
  double a = 0.0;
  double b = 0.0;
  double dt = 0.0;
  bool smallness = false;
  std::vector<double> times;
  std::vector<ReplicaTrace> replicas;
  double fitted_rate = 0.0;  ///< smallest fitted modified-norm rate over replicas
  double worst_modified_ratio = 0.0;
  double worst_euclid_ratio = 0.0;
  double modified_tolerance = 1.0;
  double euclid_tolerance = 1.0;
  std::size_t envelope_violations = 0;
  bool envelope_ok = false;
  std::vector<std::string> warnings;
};

/// Synchronous-coupling experiment: for each replica, two independent
/// initial configurations driven by the same noise; records the modified and
/// Euclidean squared distances and compares them with exp(-(a/4) t) and
/// 4 exp(-(a/4) t). Proceeds with a warning when the smallness condition
/// fails.
ContractionReport contraction_experiment(const ModelParams& params, const SimConfig& cfg,
                                         const ContractionOptions& options);

/// Least-squares slope of log(values) against times restricted to
/// [t_from, t_to]; returns -slope.
double fitted_decay_rate(std::span<const double> times, std::span<const double> values,
                         double t_from, double t_to);

}  // namespace vfp
