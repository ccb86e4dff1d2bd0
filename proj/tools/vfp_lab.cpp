#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfp/cli/config.hpp"
#include "vfp/cli/experiments.hpp"
#include "vfp/errors.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

int run(vfp::cli::Experiment e, const Options& opts) {
  using namespace vfp::cli;
  ExperimentConfig cfg = opts.config.empty() ? parse_config(nlohmann::json::object()) : load_config(opts.config);
  if (opts.out) cfg.output = *opts.out;
  if (opts.seed) cfg.sim.sim.seed = *opts.seed;
  if (cfg.experiment && *cfg.experiment != e) {
    std::cerr << "note: config names experiment '" << to_string(*cfg.experiment) << "', running '"
              << to_string(e) << "'\n";
  }

  const RunOutcome outcome = run_experiment(e, cfg);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : outcome.files) std::cout << f << '\n';
  if (outcome.exit_code == kExitEnvelope) std::cerr << "error: envelope violated inside the guaranteed regime\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  using vfp::cli::Experiment;
  CLI::App app{"Numerical experiments for the Vlasov-Fokker-Planck equation"};
  app.require_subcommand(1);

  Options opts;
  std::optional<Experiment> chosen;
  for (Experiment e : {Experiment::contraction, Experiment::lyapunov, Experiment::fisher, Experiment::stationary,
                       Experiment::oracle, Experiment::simulate}) {
    CLI::App* sub = app.add_subcommand(vfp::cli::to_string(e));
    sub->add_option("--config", opts.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output path prefix");
    sub->add_option("--seed", opts.seed, "overrides the configured seed");
    sub->callback([&chosen, e] { chosen = e; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : vfp::cli::kExitConfig;
  }

  try {
    return run(*chosen, opts);
  } catch (const vfp::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return vfp::cli::kExitConfig;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return vfp::cli::kExitConfig;
  } catch (const vfp::DivergenceError& err) {
    std::cerr << "divergence: " << err.what() << '\n';
    return vfp::cli::kExitDivergence;
  } catch (const vfp::SchemeError& err) {
    std::cerr << "scheme failure: " << err.what() << '\n';
    return vfp::cli::kExitDivergence;
  } catch (const vfp::NonConvergenceError& err) {
    std::cerr << "no convergence: " << err.what() << '\n';
    return vfp::cli::kExitDivergence;
  } catch (const vfp::UnconfinedError& err) {
    std::cerr << "unconfined model: " << err.what() << '\n';
    return vfp::cli::kExitConfig;
  } catch (const vfp::ContractViolation& err) {
    std::cerr << "invalid request: " << err.what() << '\n';
    return vfp::cli::kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return vfp::cli::kExitDivergence;
  }
}
