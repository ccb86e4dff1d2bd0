#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfp/cli/config.hpp"
#include "vfp/grid.hpp"

namespace vfp::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDivergence = 2;
inline constexpr int kExitEnvelope = 3;

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
  nlohmann::json summary;
};

RunOutcome run_contraction(const ExperimentConfig& cfg);
RunOutcome run_lyapunov(const ExperimentConfig& cfg);
RunOutcome run_fisher(const ExperimentConfig& cfg);
RunOutcome run_stationary(const ExperimentConfig& cfg);
RunOutcome run_oracle(const ExperimentConfig& cfg);
RunOutcome run_simulate(const ExperimentConfig& cfg);

RunOutcome run_experiment(Experiment e, const ExperimentConfig& cfg);

struct LyapunovRow {
  double t = 0.0;
  double entropy = 0.0;
  double E_classical = 0.0;
  double F_quadratic = 0.0;  ///< nan unless the kernel is quadratic-linear
  double fisher_I = 0.0;
  double fisher_A = 0.0;
  double w2_to_stationary = 0.0;  ///< nan when not sampled
  double mass = 0.0;
};

/// Grid flow from `initial` with the functionals evaluated at every output.
/// `stationary` (if given) is the reference for the W2 column.
std::vector<LyapunovRow> lyapunov_series(const ModelParams& params, const GridSection& grid,
                                         const PhaseGrid& initial, const LyapunovSection& opts,
                                         std::uint64_t seed, const PhaseGrid* stationary);

struct EnergyWitness {
  bool found = false;
  GaussianState initial;
  /// (E(f_tau) - E(f_0)) / tau on the grid.
  double rate_grid = 0.0;
  /// Closed-form Gaussian rate (nan unless the kernel is quadratic-linear).
  double rate_closed_form = 0.0;
  double tau = 0.0;
  int candidates_tried = 0;
};

/// Scans Gaussian initial data near equilibrium with a velocity offset and
/// returns the first one whose classical free energy increases over a short
/// grid run.
EnergyWitness search_energy_witness(const ModelParams& params, const GridConfig& grid);

struct FisherRow {
  double t = 0.0;
  double fisher_A = 0.0;
  double fisher_I = 0.0;
  double envelope_A = 0.0;
  double envelope_I = 0.0;
};

std::vector<FisherRow> fisher_series(const ModelParams& params, const GridSection& grid, const PhaseGrid& initial);

/// Fisher envelope check with multiplicative slack.
bool fisher_envelopes_hold(const std::vector<FisherRow>& rows, double slack = 1.1);

}  // namespace vfp::cli
