#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfp/gaussian.hpp"
#include "vfp/model.hpp"
#include "vfp/particles.hpp"
#include "vfp/pde.hpp"

namespace vfp::cli {

enum class Experiment { contraction, lyapunov, fisher, stationary, oracle, simulate };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

struct SimSection {
  SimConfig sim;
  std::size_t n_particles = 64;
  double horizon = 20.0;
  std::size_t replicas = 16;
  double sample_every = 0.1;
  unsigned threads = 0;
};

struct GridSection {
  GridConfig grid;
  double horizon = 10.0;
  double output_every = 0.1;
};

struct LyapunovSection {
  /// Compute w2_to_stationary every this many outputs (others are nan); 0 disables.
  std::size_t w2_every = 10;
  std::size_t w2_samples = 2048;
  bool witness_search = false;
};

struct OracleSection {
  std::vector<std::pair<GaussianState, GaussianState>> bures_pairs;
  GaussianState g1;
  GaussianState g2;
  std::vector<int> particle_counts;
};

struct ExperimentConfig {
  std::optional<Experiment> experiment;
  std::string output = "vfp";
  KernelDescriptor kernel_descriptor;
  ModelParams model{1.0, 0.0, builtin_kernel(kernel::Zero{})};
  SimSection sim;
  GridSection grid;
  GaussianState initial;
  /// Particle engine for `simulate`; false selects the grid solver.
  bool simulate_particles = true;
  LyapunovSection lyapunov;
  OracleSection oracle;
};

/// Parses a kernel descriptor object; unknown "type" raises ConfigError.
KernelDescriptor parse_kernel(const nlohmann::json& j);
nlohmann::json kernel_to_json(const KernelDescriptor& d);

GaussianState parse_gaussian(const nlohmann::json& j);
nlohmann::json gaussian_to_json(const GaussianState& g);

/// Validates every section and raises ConfigError on the first problem.
/// "lambda" may be a number or the string "boundary", which selects the
/// largest lambda allowed by the smallness condition.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace vfp::cli
