#include "vfp/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "vfp/errors.hpp"

namespace vfp::cli {
namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + std::string(section));
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

double positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(std::string(what) + " must be positive");
  return value;
}

Integrator parse_integrator(const std::string& name) {
  if (name == "kinetic_splitting") return Integrator::kinetic_splitting;
  if (name == "euler_maruyama") return Integrator::euler_maruyama;
  throw ConfigError("unknown integrator '" + name + "'");
}

Splitting parse_splitting(const std::string& name) {
  if (name == "strang") return Splitting::strang;
  if (name == "lie") return Splitting::lie;
  throw ConfigError("unknown splitting '" + name + "'");
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "contraction") return Experiment::contraction;
  if (name == "lyapunov") return Experiment::lyapunov;
  if (name == "fisher") return Experiment::fisher;
  if (name == "stationary") return Experiment::stationary;
  if (name == "oracle") return Experiment::oracle;
  if (name == "simulate") return Experiment::simulate;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::contraction: return "contraction";
    case Experiment::lyapunov: return "lyapunov";
    case Experiment::fisher: return "fisher";
    case Experiment::stationary: return "stationary";
    case Experiment::oracle: return "oracle";
    case Experiment::simulate: return "simulate";
  }
  return "unknown";
}

KernelDescriptor parse_kernel(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("kernel descriptor needs a \"type\"");
  const auto type = get_or<std::string>(j, "type", "");
  if (type == "zero") {
    check_keys(j, "kernel", {"type"});
    return kernel::Zero{};
  }
  if (type == "quadratic_linear") {
    check_keys(j, "kernel", {"type", "a", "b"});
    return kernel::QuadraticLinear{get_or(j, "a", 0.0), get_or(j, "b", 0.0)};
  }
  if (type == "sine") {
    check_keys(j, "kernel", {"type", "amplitude"});
    return kernel::Sine{get_or(j, "amplitude", 1.0)};
  }
  if (type == "gaussian_bump") {
    check_keys(j, "kernel", {"type", "height", "width"});
    return kernel::GaussianBump{get_or(j, "height", 1.0), positive(get_or(j, "width", 1.0), "kernel width")};
  }
  if (type == "symmetrized") {
    check_keys(j, "kernel", {"type", "inner"});
    if (!j.contains("inner")) throw ConfigError("symmetrized kernel needs \"inner\"");
    return symmetrized(parse_kernel(j.at("inner")));
  }
  throw ConfigError("unknown kernel type '" + type + "'");
}

json kernel_to_json(const KernelDescriptor& d) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kernel::Zero>) {
          return {{"type", "zero"}};
        } else if constexpr (std::is_same_v<K, kernel::QuadraticLinear>) {
          return {{"type", "quadratic_linear"}, {"a", k.a}, {"b", k.b}};
        } else if constexpr (std::is_same_v<K, kernel::Sine>) {
          return {{"type", "sine"}, {"amplitude", k.amplitude}};
        } else if constexpr (std::is_same_v<K, kernel::GaussianBump>) {
          return {{"type", "gaussian_bump"}, {"height", k.height}, {"width", k.width}};
        } else {
          return {{"type", "symmetrized"}, {"inner", kernel_to_json(*k.inner)}};
        }
      },
      d);
}

GaussianState parse_gaussian(const json& j) {
  check_keys(j, "gaussian", {"mean", "cov"});
  GaussianState g;
  try {
    if (j.contains("mean")) {
      const auto m = j.at("mean").get<std::vector<double>>();
      if (m.size() != 2) throw ConfigError("gaussian mean must have 2 entries");
      g.mean << m[0], m[1];
    }
    if (j.contains("cov")) {
      const auto c = j.at("cov").get<std::vector<std::vector<double>>>();
      if (c.size() != 2 || c[0].size() != 2 || c[1].size() != 2) {
        throw ConfigError("gaussian cov must be 2x2");
      }
      g.cov << c[0][0], c[0][1], c[1][0], c[1][1];
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad gaussian: ") + e.what());
  }
  try {
    validate_gaussian(g);
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return g;
}

json gaussian_to_json(const GaussianState& g) {
  return {{"mean", {g.mean(0), g.mean(1)}},
          {"cov", {{g.cov(0, 0), g.cov(0, 1)}, {g.cov(1, 0), g.cov(1, 1)}}}};
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"experiment", "output", "seed", "model", "sim", "grid", "initial", "simulate", "lyapunov", "oracle"});
  ExperimentConfig cfg;
  if (j.contains("experiment")) cfg.experiment = parse_experiment(get_or<std::string>(j, "experiment", ""));
  cfg.output = get_or<std::string>(j, "output", cfg.output);

  const json model = j.value("model", json::object());
  check_keys(model, "model", {"gamma", "lambda", "kernel"});
  const double gamma = positive(get_or(model, "gamma", 1.0), "model.gamma");
  cfg.kernel_descriptor = model.contains("kernel") ? parse_kernel(model.at("kernel")) : KernelDescriptor{kernel::Zero{}};
  InteractionKernel kern = builtin_kernel(cfg.kernel_descriptor);
  double lambda = 0.0;
  if (model.contains("lambda") && model.at("lambda").is_string()) {
    if (model.at("lambda").get<std::string>() != "boundary") {
      throw ConfigError("model.lambda must be a number or \"boundary\"");
    }
    lambda = smallness_threshold(gamma, kern.d2_sup());
    if (!std::isfinite(lambda)) throw ConfigError("lambda = \"boundary\" needs a kernel with K'' != 0");
  } else {
    lambda = get_or(model, "lambda", 0.0);
  }
  cfg.model = make_model_params(gamma, lambda, std::move(kern));

  const json sim = j.value("sim", json::object());
  check_keys(sim, "sim", {"dt", "seed", "integrator", "N", "horizon", "replicas", "sample_every", "threads"});
  cfg.sim.sim.dt = positive(get_or(sim, "dt", 1e-3), "sim.dt");
  cfg.sim.sim.seed = get_or<std::uint64_t>(sim, "seed", get_or<std::uint64_t>(j, "seed", 0));
  cfg.sim.sim.integrator = parse_integrator(get_or<std::string>(sim, "integrator", "kinetic_splitting"));
  cfg.sim.n_particles = get_or<std::size_t>(sim, "N", 64);
  if (cfg.sim.n_particles < 2) throw ConfigError("sim.N must be at least 2");
  cfg.sim.horizon = positive(get_or(sim, "horizon", 20.0), "sim.horizon");
  cfg.sim.replicas = get_or<std::size_t>(sim, "replicas", 16);
  if (cfg.sim.replicas < 1) throw ConfigError("sim.replicas must be at least 1");
  cfg.sim.sample_every = positive(get_or(sim, "sample_every", 0.1), "sim.sample_every");
  if (cfg.sim.sample_every < cfg.sim.sim.dt) throw ConfigError("sim.sample_every must be >= sim.dt");
  cfg.sim.threads = get_or<unsigned>(sim, "threads", 0);

  const json grid = j.value("grid", json::object());
  check_keys(grid, "grid", {"Lx", "Lv", "nx", "nv", "dt", "cfl_safety", "splitting", "horizon", "output_every"});
  GridConfig& g = cfg.grid.grid;
  g.Lx = positive(get_or(grid, "Lx", g.Lx), "grid.Lx");
  g.Lv = positive(get_or(grid, "Lv", g.Lv), "grid.Lv");
  g.nx = get_or<std::size_t>(grid, "nx", g.nx);
  g.nv = get_or<std::size_t>(grid, "nv", g.nv);
  g.dt = get_or(grid, "dt", 0.0);
  g.cfl_safety = get_or(grid, "cfl_safety", g.cfl_safety);
  g.splitting = parse_splitting(get_or<std::string>(grid, "splitting", "strang"));
  validate_grid_config(g);
  if (g.dt > 0.0) VfpSolver(cfg.model, g);  // CFL check before any work
  cfg.grid.horizon = get_or(grid, "horizon", cfg.grid.horizon);
  if (!(cfg.grid.horizon >= 0.0)) throw ConfigError("grid.horizon must be >= 0");
  cfg.grid.output_every = positive(get_or(grid, "output_every", cfg.grid.output_every), "grid.output_every");

  if (j.contains("initial")) cfg.initial = parse_gaussian(j.at("initial"));

  if (j.contains("simulate")) {
    const json s = j.at("simulate");
    check_keys(s, "simulate", {"engine"});
    const auto engine = get_or<std::string>(s, "engine", "particles");
    if (engine != "particles" && engine != "grid") throw ConfigError("simulate.engine must be particles or grid");
    cfg.simulate_particles = engine == "particles";
  }

  const json lyap = j.value("lyapunov", json::object());
  check_keys(lyap, "lyapunov", {"w2_every", "w2_samples", "witness_search"});
  cfg.lyapunov.w2_every = get_or<std::size_t>(lyap, "w2_every", cfg.lyapunov.w2_every);
  cfg.lyapunov.w2_samples = get_or<std::size_t>(lyap, "w2_samples", cfg.lyapunov.w2_samples);
  if (cfg.lyapunov.w2_samples < 1 || cfg.lyapunov.w2_samples > 4096) {
    throw ConfigError("lyapunov.w2_samples must lie in [1, 4096]");
  }
  cfg.lyapunov.witness_search = get_or(lyap, "witness_search", false);

  const json oracle = j.value("oracle", json::object());
  check_keys(oracle, "oracle", {"bures_pairs", "g1", "g2", "N"});
  if (oracle.contains("bures_pairs")) {
    for (const auto& pair : oracle.at("bures_pairs")) {
      if (!pair.is_array() || pair.size() != 2) throw ConfigError("oracle.bures_pairs entries must be [g1, g2]");
      cfg.oracle.bures_pairs.emplace_back(parse_gaussian(pair[0]), parse_gaussian(pair[1]));
    }
  } else {
    GaussianState wide;
    wide.cov(0, 0) = 4.0;
    GaussianState shifted;
    shifted.mean << 1.0, -2.0;
    cfg.oracle.bures_pairs = {{GaussianState{}, GaussianState{}}, {GaussianState{}, shifted}, {GaussianState{}, wide}};
  }
  if (oracle.contains("g1")) {
    cfg.oracle.g1 = parse_gaussian(oracle.at("g1"));
  } else {
    cfg.oracle.g1.mean << 0.5, -0.25;
    cfg.oracle.g1.cov << 1.5, 0.2, 0.2, 0.8;
  }
  if (oracle.contains("g2")) {
    cfg.oracle.g2 = parse_gaussian(oracle.at("g2"));
  } else {
    cfg.oracle.g2.mean << -1.0, 0.0;
    cfg.oracle.g2.cov << 0.5, 0.0, 0.0, 1.0;
  }
  cfg.oracle.particle_counts = get_or<std::vector<int>>(oracle, "N", {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
  for (int n : cfg.oracle.particle_counts) {
    if (n < 2) throw ConfigError("oracle.N entries must be >= 2");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace vfp::cli
