#include "vfp/particles.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "vfp/errors.hpp"
#include "vfp/rng.hpp"

namespace vfp {

void validate_state(const ParticleState& state) {
  if (state.x.size() != state.v.size()) {
    throw ContractViolation("positions and velocities differ in length");
  }
  if (state.x.size() < 2) throw ContractViolation("particle system needs N >= 2");
  auto finite = [](double value) { return std::isfinite(value); };
  if (!std::all_of(state.x.begin(), state.x.end(), finite) ||
      !std::all_of(state.v.begin(), state.v.end(), finite)) {
    throw ContractViolation("particle state has non-finite entries");
  }
}

void validate_sim_config(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("sim.dt must be positive");
}

std::vector<double> pairwise_force(const ModelParams& params, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ContractViolation("pairwise_force needs N >= 2");
  std::vector<double> force(n, 0.0);
  const double inv = 1.0 / static_cast<double>(n - 1);

  if (const auto& q = params.kernel.quadratic()) {
    double total = 0.0;
    for (double xi : x) total += xi;
    for (std::size_t i = 0; i < n; ++i) {
      const double mean_others = (total - x[i]) * inv;
      force[i] = 2.0 * q->a * (x[i] - mean_others) + q->b;
    }
    return force;
  }

  const InteractionKernel& kernel = params.kernel;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) acc += kernel.d1(x[i] - x[j]);
    }
    force[i] = acc * inv;
  }
  return force;
}

std::pair<double, double> force_jacobian_norm_bound_check(const ModelParams& params,
                                                          std::span<const double> x,
                                                          std::span<const double> u, double h) {
  if (x.size() != u.size()) throw ContractViolation("direction and positions differ in length");
  std::vector<double> plus(x.begin(), x.end());
  std::vector<double> minus(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    plus[i] += h * u[i];
    minus[i] -= h * u[i];
  }
  const auto f_plus = pairwise_force(params, plus);
  const auto f_minus = pairwise_force(params, minus);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (f_plus[i] - f_minus[i]) / (2.0 * h);
    norm_sq += d * d;
  }
  return {std::sqrt(norm_sq), 2.0 * params.kernel.d2_sup()};
}

namespace {

void check_finite(const ParticleState& s) {
  bool finite = true;
  double max_abs_v = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.v[i])) finite = false;
    const double av = std::abs(s.v[i]);
    if (!(av <= max_abs_v)) max_abs_v = av;
  }
  if (!finite) throw DivergenceError(s.t, max_abs_v);
}

}  // namespace

ParticleState step(const ParticleState& state, const ModelParams& params, const SimConfig& cfg,
                   std::span<const double> noise) {
  const std::size_t n = state.size();
  if (noise.size() != n) throw ContractViolation("noise length differs from N");
  const double dt = cfg.dt;
  const double gamma = params.gamma;
  const double lambda = params.lambda;

  ParticleState next;
  next.x.resize(n);
  next.v.resize(n);
  next.t = state.t + dt;
  next.step_index = state.step_index + 1;

  switch (cfg.integrator) {
    case Integrator::euler_maruyama: {
      std::vector<double> force(n, 0.0);
      if (lambda != 0.0) force = pairwise_force(params, state.x);
      const double noise_scale = std::sqrt(2.0 * gamma * dt);
      for (std::size_t i = 0; i < n; ++i) {
        next.x[i] = state.x[i] + state.v[i] * dt;
        next.v[i] = state.v[i] - (state.x[i] + gamma * state.v[i] + lambda * force[i]) * dt +
                    noise_scale * noise[i];
      }
      break;
    }
    case Integrator::kinetic_splitting: {
      // Drift dt/2, exact Ornstein-Uhlenbeck velocity update with the force
      // frozen at the midpoint, drift dt/2.
      for (std::size_t i = 0; i < n; ++i) next.x[i] = state.x[i] + 0.5 * dt * state.v[i];
      std::vector<double> force(n, 0.0);
      if (lambda != 0.0) force = pairwise_force(params, next.x);
      const double damping = std::exp(-gamma * dt);
      const double impulse = -std::expm1(-gamma * dt) / gamma;
      const double noise_scale = std::sqrt(-std::expm1(-2.0 * gamma * dt));
      for (std::size_t i = 0; i < n; ++i) {
        const double drift = -(next.x[i] + lambda * force[i]);
        next.v[i] = damping * state.v[i] + impulse * drift + noise_scale * noise[i];
        next.x[i] += 0.5 * dt * next.v[i];
      }
      break;
    }
  }
  check_finite(next);
  return next;
}

CoupledPair coupled_step(const CoupledPair& pair, const ModelParams& params, const SimConfig& cfg,
                         std::span<const double> noise) {
  if (pair.z.size() != pair.z_tilde.size()) throw ContractViolation("coupled replicas differ in N");
  return {step(pair.z, params, cfg, noise), step(pair.z_tilde, params, cfg, noise)};
}

double modified_norm_sq(const CoupledPair& pair, const CouplingConstants& constants) {
  const std::size_t n = pair.z.size();
  if (pair.z_tilde.size() != n) throw ContractViolation("coupled replicas differ in N");
  double p_sq = 0.0;
  double q_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pair.z.x[i] - pair.z_tilde.x[i];
    const double dv = pair.z.v[i] - pair.z_tilde.v[i];
    const double p = dx + constants.a * dv;
    p_sq += p * p;
    q_sq += dv * dv;
  }
  return p_sq + constants.b * q_sq;
}

double euclid_sq(const CoupledPair& pair) {
  const std::size_t n = pair.z.size();
  if (pair.z_tilde.size() != n) throw ContractViolation("coupled replicas differ in N");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pair.z.x[i] - pair.z_tilde.x[i];
    const double dv = pair.z.v[i] - pair.z_tilde.v[i];
    acc += dx * dx + dv * dv;
  }
  return acc;
}

std::vector<double> dynamics_noise(std::uint64_t seed, std::uint64_t step_index, std::size_t n) {
  const CounterNormal normal(seed, streams::kDynamics);
  std::vector<double> noise(n);
  for (std::size_t i = 0; i < n; ++i) noise[i] = normal(i, step_index);
  return noise;
}

ParticleState sample_initial_state(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                   double mx, double sx, double mv, double sv) {
  const CounterNormal normal(seed, stream);
  ParticleState s;
  s.x.resize(n);
  s.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = mx + sx * normal(i, 0);
    s.v[i] = mv + sv * normal(i, 1);
  }
  return s;
}

double fitted_decay_rate(std::span<const double> times, std::span<const double> values,
                         double t_from, double t_to) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_from || times[k] > t_to || !(values[k] > 0.0)) continue;
    const double y = std::log(values[k]);
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double c = static_cast<double>(count);
  const double slope = (c * sty - st * sy) / (c * stt - st * st);
  return -slope;
}

namespace {

ReplicaTrace run_replica(const ModelParams& params, const SimConfig& cfg,
                         const ContractionOptions& options, const CouplingConstants& constants,
                         std::size_t replica, std::uint64_t sample_stride) {
  const std::uint64_t seed = mix64(cfg.seed + 0x632BE59BD9B4E019ULL * (replica + 1));
  CoupledPair pair{
      sample_initial_state(seed, streams::kInitial, options.n_particles, 0.0, 1.0, 0.0, 1.0),
      sample_initial_state(seed, streams::kInitialTilde, options.n_particles, 2.0, 1.5, -1.0, 1.5)};

  const auto total = static_cast<std::uint64_t>(std::llround(options.horizon / cfg.dt));
  ReplicaTrace trace;
  auto record = [&]() {
    trace.modified_norm_sq.push_back(modified_norm_sq(pair, constants));
    trace.euclid_sq.push_back(euclid_sq(pair));
  };
  record();
  for (std::uint64_t n = 0; n < total; ++n) {
    const auto noise = dynamics_noise(seed, pair.z.step_index, options.n_particles);
    pair = coupled_step(pair, params, cfg, noise);
    if ((n + 1) % sample_stride == 0) record();
  }
  return trace;
}

}  // namespace

ContractionReport contraction_experiment(const ModelParams& params, const SimConfig& cfg,
                                         const ContractionOptions& options) {
  validate_sim_config(cfg);
  if (options.n_particles < 2) throw ConfigError("contraction experiment needs N >= 2");
  if (!(options.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (options.replicas == 0) throw ConfigError("replicas must be positive");

  const CouplingConstants constants = coupling_constants(params.gamma);
  ContractionReport report;
  report.gamma = params.gamma;
  report.lambda = params.lambda;
  report.a = constants.a;
  report.b = constants.b;
  report.dt = cfg.dt;
  report.smallness = smallness_holds(params);
  if (!report.smallness) {
    report.warnings.push_back(
        "outside-guarantee: lambda * sup|K''| exceeds min(gamma, 1/gamma)/8; envelopes are not "
        "guaranteed");
  }

  const auto sample_stride =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(options.sample_every / cfg.dt)));
  const auto total = static_cast<std::uint64_t>(std::llround(options.horizon / cfg.dt));
  for (std::uint64_t k = 0; k <= total / sample_stride; ++k) {
    report.times.push_back(static_cast<double>(k * sample_stride) * cfg.dt);
  }

  unsigned threads = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  threads = std::max(1u, threads);
  report.replicas.resize(options.replicas);
  for (std::size_t begin = 0; begin < options.replicas; begin += threads) {
    const std::size_t end = std::min<std::size_t>(options.replicas, begin + threads);
    std::vector<std::future<ReplicaTrace>> jobs;
    for (std::size_t r = begin; r < end; ++r) {
      jobs.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async,
                                run_replica, std::cref(params), std::cref(cfg), std::cref(options),
                                std::cref(constants), r, sample_stride));
    }
    for (std::size_t r = begin; r < end; ++r) report.replicas[r] = jobs[r - begin].get();
  }

  const double rate = constants.a / 4.0;
  report.modified_tolerance = 1.0 + options.modified_slack_per_dt * cfg.dt;
  report.euclid_tolerance = options.euclid_slack;
  report.fitted_rate = std::numeric_limits<double>::infinity();
  for (ReplicaTrace& trace : report.replicas) {
    const auto& times = report.times;
    trace.fitted_rate_modified =
        fitted_decay_rate(times, trace.modified_norm_sq, options.horizon / 4.0, options.horizon);
    trace.fitted_rate_euclid =
        fitted_decay_rate(times, trace.euclid_sq, options.horizon / 4.0, options.horizon);

    // max_{s<t} [log N(t) + rate t] - [log N(s) + rate s]
    double running_min = std::numeric_limits<double>::infinity();
    double worst_log = -std::numeric_limits<double>::infinity();
    const double e0 = trace.euclid_sq.front();
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double g = std::log(trace.modified_norm_sq[k]) + rate * times[k];
      if (k > 0) worst_log = std::max(worst_log, g - running_min);
      running_min = std::min(running_min, g);
      const double envelope = 4.0 * e0 * std::exp(-rate * times[k]);
      trace.worst_euclid_ratio = std::max(trace.worst_euclid_ratio, trace.euclid_sq[k] / envelope);
      if (trace.euclid_sq[k] > report.euclid_tolerance * envelope) ++report.envelope_violations;
    }
    trace.worst_modified_ratio = std::exp(worst_log);
    if (trace.worst_modified_ratio > report.modified_tolerance) ++report.envelope_violations;

    report.fitted_rate = std::min(report.fitted_rate, trace.fitted_rate_modified);
    report.worst_modified_ratio = std::max(report.worst_modified_ratio, trace.worst_modified_ratio);
    report.worst_euclid_ratio = std::max(report.worst_euclid_ratio, trace.worst_euclid_ratio);
  }
  report.envelope_ok = report.worst_modified_ratio <= report.modified_tolerance &&
                       report.worst_euclid_ratio <= report.euclid_tolerance;
  if (!report.envelope_ok && !report.smallness) {
    report.warnings.push_back("envelope violations observed outside the guaranteed regime");
  }
  return report;
}

}  // namespace vfp
