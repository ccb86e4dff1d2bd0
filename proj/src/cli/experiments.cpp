#include "vfp/cli/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "vfp/errors.hpp"
#include "vfp/functionals.hpp"
#include "vfp/gaussian.hpp"
#include "vfp/particles.hpp"
#include "vfp/pde.hpp"
#include "vfp/rng.hpp"

namespace vfp::cli {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr char kOutsideGuarantee[] =
    "outside-guarantee: lambda * sup|K''| exceeds min(gamma, 1/gamma)/8";

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t c = 0; c < header.size(); ++c) out_ << (c ? "," : "") << header[c];
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << format_double(v);
      first = false;
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw ConfigError("cannot open output file " + path);
  return out;
}

void write_text(RunOutcome& outcome, const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  outcome.files.push_back(path);
}

void write_json(RunOutcome& outcome, const std::string& path, const json& j) {
  write_text(outcome, path, j.dump(2) + "\n");
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::uint64_t seed_of(const ExperimentConfig& cfg) { return cfg.sim.sim.seed; }

bool is_quadratic(const ModelParams& params) { return params.kernel.quadratic().has_value(); }

void finish(RunOutcome& outcome, const std::string& path) {
  outcome.summary["warnings"] = outcome.warnings;
  write_json(outcome, path, outcome.summary);
}

/// Particles with (x, v) ~ N(mean, cov) from the stream (seed, kInitial).
ParticleState sample_gaussian_particles(const GaussianState& g, std::size_t n, std::uint64_t seed) {
  const Eigen::Matrix2d L = g.cov.llt().matrixL();
  const CounterNormal normal(seed, streams::kInitial);
  ParticleState s;
  s.x.resize(n);
  s.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z0 = normal(i, 0);
    const double z1 = normal(i, 1);
    s.x[i] = g.mean(0) + L(0, 0) * z0;
    s.v[i] = g.mean(1) + L(1, 0) * z0 + L(1, 1) * z1;
  }
  return s;
}

GridMoments particle_moments(const ParticleState& s) {
  const double n = static_cast<double>(s.size());
  GridMoments m;
  m.mean.setZero();
  for (std::size_t i = 0; i < s.size(); ++i) m.mean += Eigen::Vector2d(s.x[i], s.v[i]);
  m.mean /= n;
  m.cov.setZero();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Eigen::Vector2d d(s.x[i] - m.mean(0), s.v[i] - m.mean(1));
    m.cov += d * d.transpose();
  }
  m.cov /= n;
  return m;
}

void moment_row(CsvWriter& csv, double t, const GridMoments& m) {
  csv.row({t, m.mean(0), m.mean(1), m.cov(0, 0), m.cov(0, 1), m.cov(1, 1)});
}

}  // namespace

RunOutcome run_contraction(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  ContractionOptions options;
  options.n_particles = cfg.sim.n_particles;
  options.horizon = cfg.sim.horizon;
  options.replicas = cfg.sim.replicas;
  options.sample_every = cfg.sim.sample_every;
  options.threads = cfg.sim.threads;
  const ContractionReport report = contraction_experiment(params, cfg.sim.sim, options);

  RunOutcome outcome;
  outcome.warnings = report.warnings;
  const double rate = report.a / 4.0;

  CsvWriter csv({"replica", "t", "modified_norm_sq", "euclid_sq", "envelope_modified", "envelope_euclid"});
  json modified = json::array();
  json euclid = json::array();
  for (std::size_t r = 0; r < report.replicas.size(); ++r) {
    const ReplicaTrace& trace = report.replicas[r];
    for (std::size_t n = 0; n < report.times.size(); ++n) {
      const double t = report.times[n];
      const double decay = std::exp(-rate * t);
      csv.row({static_cast<double>(r), t, trace.modified_norm_sq[n], trace.euclid_sq[n],
               trace.modified_norm_sq[0] * decay, 4.0 * trace.euclid_sq[0] * decay});
    }
    modified.push_back(trace.modified_norm_sq);
    euclid.push_back(trace.euclid_sq);
  }
  write_text(outcome, cfg.output + ".csv", csv.str());

  outcome.summary = {
      {"experiment", "contraction"},
      {"gamma", report.gamma},
      {"lambda", report.lambda},
      {"a", report.a},
      {"b", report.b},
      {"dt", report.dt},
      {"smallness", report.smallness},
      {"outside_guarantee", !report.smallness},
      {"times", report.times},
      {"modified_norm_sq", modified},
      {"euclid_sq", euclid},
      {"fitted_rate", report.fitted_rate},
      {"guaranteed_rate", rate},
      {"worst_modified_ratio", report.worst_modified_ratio},
      {"worst_euclid_ratio", report.worst_euclid_ratio},
      {"envelope_violations", report.envelope_violations},
      {"envelope_ok", report.envelope_ok},
  };
  finish(outcome, cfg.output + ".json");
  if (report.smallness && !report.envelope_ok) outcome.exit_code = kExitEnvelope;
  return outcome;
}

std::vector<LyapunovRow> lyapunov_series(const ModelParams& params, const GridSection& grid,
                                         const PhaseGrid& initial, const LyapunovSection& opts,
                                         std::uint64_t seed, const PhaseGrid* stationary) {
  VfpSolver solver(params, grid.grid);
  const Eigen::Matrix2d A = coupling_constants(params.gamma).A;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const bool quadratic = is_quadratic(params);

  std::vector<LyapunovRow> rows;
  PhaseGrid f = initial;
  solver.advance(f, grid.horizon, grid.output_every, [&](const PhaseGrid& g) {
    LyapunovRow row;
    row.t = g.t;
    row.entropy = entropy(g);
    row.E_classical = classical_free_energy(g, params);
    row.F_quadratic = quadratic ? mean_field_free_energy(g, params) : kNaN;
    row.fisher_I = fisher_information(g, params, I);
    row.fisher_A = fisher_information(g, params, A);
    row.w2_to_stationary = kNaN;
    if (stationary && opts.w2_every > 0 && rows.size() % opts.w2_every == 0) {
      row.w2_to_stationary = w2_grid(g, *stationary, seed, opts.w2_samples);
    }
    row.mass = g.mass();
    rows.push_back(row);
  });
  return rows;
}

EnergyWitness search_energy_witness(const ModelParams& params, const GridConfig& grid) {
  const GridShape shape = grid.shape();
  const GridMoments eq = grid_moments(stationary_fixed_point(params, shape).grid);
  GaussianState base;
  base.mean = eq.mean;
  base.cov = Eigen::Matrix2d::Zero();
  base.cov(0, 0) = eq.cov(0, 0);
  base.cov(1, 1) = eq.cov(1, 1);

  VfpSolver solver(params, grid);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(0.01 / solver.dt())));
  const double tau = static_cast<double>(steps) * solver.dt();

  EnergyWitness w;
  w.tau = tau;
  for (double dmx : {0.0, 0.25, -0.25}) {
    for (double dmv : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      for (double sign : {1.0, -1.0}) {
        GaussianState g = base;
        g.mean(0) += dmx;
        g.mean(1) += sign * dmv;
        ++w.candidates_tried;
        PhaseGrid f = gaussian_grid(shape, g);
        const double e0 = classical_free_energy(f, params);
        for (std::size_t s = 0; s < steps; ++s) solver.step(f);
        const double rate = (classical_free_energy(f, params) - e0) / tau;
        if (rate > 1e-6) {
          w.found = true;
          w.initial = g;
          w.rate_grid = rate;
          w.rate_closed_form = is_quadratic(params) ? classical_free_energy_rate(g, params) : kNaN;
          return w;
        }
      }
    }
  }
  return w;
}

RunOutcome run_lyapunov(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  const GridShape shape = cfg.grid.grid.shape();
  RunOutcome outcome;
  outcome.summary = {{"experiment", "lyapunov"}};

  GaussianState start = cfg.initial;
  if (cfg.lyapunov.witness_search) {
    const EnergyWitness w = search_energy_witness(params, cfg.grid.grid);
    json wj = {{"found", w.found},
               {"candidates_tried", w.candidates_tried},
               {"tau", w.tau},
               {"initial", w.found ? gaussian_to_json(w.initial) : json(nullptr)},
               {"rate_grid", w.found ? json(w.rate_grid) : json(nullptr)},
               {"rate_closed_form", w.found ? finite_or_null(w.rate_closed_form) : json(nullptr)}};
    write_json(outcome, cfg.output + "_witness.json", wj);
    outcome.summary["witness"] = wj;
    if (w.found) {
      start = w.initial;
    } else {
      outcome.warnings.push_back("no energy witness found among the scanned initial conditions");
    }
  }

  const StationaryResult stationary = stationary_fixed_point(params, shape);
  for (const auto& warning : stationary.warnings) outcome.warnings.push_back(warning);
  const auto rows = lyapunov_series(params, cfg.grid, gaussian_grid(shape, start), cfg.lyapunov,
                                    seed_of(cfg), &stationary.grid);

  CsvWriter csv({"t", "entropy", "E_classical", "F_quadratic_or_nan", "fisher_I", "fisher_A",
                 "w2_to_stationary", "mass"});
  double max_rise_E = -std::numeric_limits<double>::infinity();
  double max_rise_F = kNaN;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& r = rows[n];
    csv.row({r.t, r.entropy, r.E_classical, r.F_quadratic, r.fisher_I, r.fisher_A, r.w2_to_stationary, r.mass});
    if (n == 0) continue;
    max_rise_E = std::max(max_rise_E, r.E_classical - rows[n - 1].E_classical);
    if (std::isfinite(r.F_quadratic)) {
      const double rise = r.F_quadratic - rows[n - 1].F_quadratic;
      max_rise_F = std::isnan(max_rise_F) ? rise : std::max(max_rise_F, rise);
    }
  }
  write_text(outcome, cfg.output + ".csv", csv.str());

  outcome.summary["initial"] = gaussian_to_json(start);
  outcome.summary["outputs"] = rows.size();
  outcome.summary["max_step_increase_E"] = finite_or_null(max_rise_E);
  outcome.summary["max_step_increase_F"] = finite_or_null(max_rise_F);
  outcome.summary["E_monotone"] = !(max_rise_E > 1e-6);
  outcome.summary["F_monotone"] = std::isnan(max_rise_F) ? json(nullptr) : json(!(max_rise_F > 1e-6));
  finish(outcome, cfg.output + ".json");
  return outcome;
}

std::vector<FisherRow> fisher_series(const ModelParams& params, const GridSection& grid, const PhaseGrid& initial) {
  VfpSolver solver(params, grid.grid);
  const CouplingConstants c = coupling_constants(params.gamma);
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const double rate_A = c.a / 4.0;
  const double rate_I = std::min(params.gamma, 1.0 / params.gamma) / 8.0;

  std::vector<FisherRow> rows;
  PhaseGrid f = initial;
  solver.advance(f, grid.horizon, grid.output_every, [&](const PhaseGrid& g) {
    FisherRow row;
    row.t = g.t;
    row.fisher_A = fisher_information(g, params, c.A);
    row.fisher_I = fisher_information(g, params, I);
    const double a0 = rows.empty() ? row.fisher_A : rows.front().fisher_A;
    const double i0 = rows.empty() ? row.fisher_I : rows.front().fisher_I;
    row.envelope_A = a0 * std::exp(-rate_A * g.t);
    row.envelope_I = 4.0 * i0 * std::exp(-rate_I * g.t);
    rows.push_back(row);
  });
  return rows;
}

bool fisher_envelopes_hold(const std::vector<FisherRow>& rows, double slack) {
  // Absolute floor so that a stationary start (I(0) ~ 0) is not judged on rounding noise.
  constexpr double kFloor = 1e-10;
  for (const auto& r : rows) {
    if (r.fisher_A > slack * r.envelope_A + kFloor) return false;
    if (r.fisher_I > slack * r.envelope_I + kFloor) return false;
  }
  return true;
}

RunOutcome run_fisher(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  RunOutcome outcome;
  const bool smallness = smallness_holds(params);
  if (!smallness) outcome.warnings.push_back(kOutsideGuarantee);

  const auto rows = fisher_series(params, cfg.grid, gaussian_grid(cfg.grid.grid.shape(), cfg.initial));
  CsvWriter csv({"t", "fisher_A", "fisher_I", "envelope_A", "envelope_I"});
  double worst_A = 0.0, worst_I = 0.0;
  for (const auto& r : rows) {
    csv.row({r.t, r.fisher_A, r.fisher_I, r.envelope_A, r.envelope_I});
    if (r.envelope_A > 0.0) worst_A = std::max(worst_A, r.fisher_A / r.envelope_A);
    if (r.envelope_I > 0.0) worst_I = std::max(worst_I, r.fisher_I / r.envelope_I);
  }
  write_text(outcome, cfg.output + ".csv", csv.str());

  const bool hold = fisher_envelopes_hold(rows);
  outcome.summary = {{"experiment", "fisher"},
                     {"smallness", smallness},
                     {"outside_guarantee", !smallness},
                     {"initial", gaussian_to_json(cfg.initial)},
                     {"worst_ratio_A", worst_A},
                     {"worst_ratio_I", worst_I},
                     {"slack", 1.1},
                     {"envelope_ok", hold}};
  finish(outcome, cfg.output + ".json");
  if (smallness && !hold) outcome.exit_code = kExitEnvelope;
  return outcome;
}

RunOutcome run_stationary(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  const StationaryResult result = stationary_fixed_point(params, cfg.grid.grid.shape());
  RunOutcome outcome;
  outcome.warnings = result.warnings;

  {
    std::ostringstream csv;
    write_grid_csv(csv, result.grid);
    write_text(outcome, cfg.output + ".csv", csv.str());
  }
  {
    const std::string path = cfg.output + ".bin";
    auto out = open_output(path, std::ios::out | std::ios::binary);
    write_grid_binary(out, result.grid);
    outcome.files.push_back(path);
  }

  const GridMoments m = grid_moments(result.grid);
  const Eigen::Matrix2d A = coupling_constants(params.gamma).A;
  outcome.summary = {{"experiment", "stationary"},
                     {"iterations", result.iterations},
                     {"residual", result.residual},
                     {"mass", result.grid.mass()},
                     {"mean", {m.mean(0), m.mean(1)}},
                     {"cov", {{m.cov(0, 0), m.cov(0, 1)}, {m.cov(1, 0), m.cov(1, 1)}}},
                     {"fisher_A", fisher_information(result.grid, params, A)},
                     {"smallness", smallness_holds(params)}};
  finish(outcome, cfg.output + ".json");
  return outcome;
}

RunOutcome run_oracle(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  RunOutcome outcome;
  outcome.summary = {{"experiment", "oracle"}, {"gamma", params.gamma}, {"lambda", params.lambda},
                     {"kernel", kernel_to_json(cfg.kernel_descriptor)}};

  json pairs = json::array();
  for (const auto& [g1, g2] : cfg.oracle.bures_pairs) {
    pairs.push_back({{"g1", gaussian_to_json(g1)}, {"g2", gaussian_to_json(g2)}, {"w2", bures_w2(g1, g2)}});
  }
  outcome.summary["bures"] = pairs;

  if (!is_quadratic(params)) {
    outcome.warnings.push_back("kernel is not quadratic-linear; stationary Gaussian and free-energy table skipped");
    outcome.summary["stationary_gaussian"] = nullptr;
    outcome.summary["free_energy_table"] = nullptr;
    finish(outcome, cfg.output + ".json");
    return outcome;
  }

  outcome.summary["stationary_gaussian"] = gaussian_to_json(stationary_gaussian(params));
  const GaussianState& g1 = cfg.oracle.g1;
  const GaussianState& g2 = cfg.oracle.g2;
  const double limit = free_energy_quadratic(g1, params) - free_energy_quadratic(g2, params);
  json table = json::array();
  for (int N : cfg.oracle.particle_counts) {
    const double diff =
        free_energy_particle_limit(g1, params, N) - free_energy_particle_limit(g2, params, N);
    table.push_back({{"N", N}, {"difference", diff}, {"gap", diff - limit}});
  }
  outcome.summary["g1"] = gaussian_to_json(g1);
  outcome.summary["g2"] = gaussian_to_json(g2);
  outcome.summary["free_energy_limit_difference"] = limit;
  outcome.summary["free_energy_table"] = table;
  finish(outcome, cfg.output + ".json");
  return outcome;
}

RunOutcome run_simulate(const ExperimentConfig& cfg) {
  const ModelParams& params = cfg.model;
  RunOutcome outcome;
  CsvWriter csv({"t", "mean_x", "mean_v", "var_x", "cov_xv", "var_v"});

  if (cfg.simulate_particles) {
    const SimConfig& sim = cfg.sim.sim;
    const auto every = static_cast<std::uint64_t>(std::max(1.0, std::round(cfg.sim.sample_every / sim.dt)));
    ParticleState state = sample_gaussian_particles(cfg.initial, cfg.sim.n_particles, sim.seed);
    const ParticleState last = simulate(state, params, sim, cfg.sim.horizon, every,
                                        [&](const ParticleState& s) { moment_row(csv, s.t, particle_moments(s)); });
    outcome.summary = {{"experiment", "simulate"}, {"engine", "particles"}, {"N", last.size()},
                       {"steps", last.step_index}, {"t", last.t}};
  } else {
    VfpSolver solver(params, cfg.grid.grid);
    PhaseGrid f = gaussian_grid(cfg.grid.grid.shape(), cfg.initial);
    solver.advance(f, cfg.grid.horizon, cfg.grid.output_every,
                   [&](const PhaseGrid& g) { moment_row(csv, g.t, grid_moments(g)); });
    const std::string path = cfg.output + ".bin";
    auto out = open_output(path, std::ios::out | std::ios::binary);
    write_grid_binary(out, f);
    outcome.files.push_back(path);
    outcome.summary = {{"experiment", "simulate"}, {"engine", "grid"}, {"dt", solver.dt()},
                       {"t", f.t}, {"mass", f.mass()}, {"max_mass_drift", solver.max_mass_drift()}};
  }
  write_text(outcome, cfg.output + ".csv", csv.str());
  finish(outcome, cfg.output + ".json");
  return outcome;
}

RunOutcome run_experiment(Experiment e, const ExperimentConfig& cfg) {
  switch (e) {
    case Experiment::contraction: return run_contraction(cfg);
    case Experiment::lyapunov: return run_lyapunov(cfg);
    case Experiment::fisher: return run_fisher(cfg);
    case Experiment::stationary: return run_stationary(cfg);
    case Experiment::oracle: return run_oracle(cfg);
    case Experiment::simulate: return run_simulate(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace vfp::cli
