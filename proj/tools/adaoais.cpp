// Command line front end: adaptive importance sampling runs, MSE studies,
// ground-truth fixtures, and gradient checks.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "adaoais/adaoais.hpp"

namespace {

void add_experiment_options(CLI::App* cmd, adaoais::CommandOptions& opt) {
  cmd->add_option("--config", opt.config_path, "INI experiment description");
  cmd->add_option("--preset", opt.preset, "bundled experiment preset (see --help-presets)");
  cmd->add_option("--seed", opt.seed, "override the master seed");
  cmd->add_option("--jobs", opt.jobs, "worker threads across runs")->check(CLI::PositiveNumber);
  cmd->add_option("--out", opt.out_dir,
                  "output directory (default: config value, or $ADAOAIS_OUT/<name>)");
  cmd->add_option("--thin", opt.thin, "keep every k-th trace row")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaoais: adaptive importance sampling with stochastic proposal optimisation"};

  bool list_presets = false;
  app.add_flag("--help-presets", list_presets, "list bundled presets and exit");

  adaoais::CommandOptions run_opt, mse_opt, fix_opt;
  CLI::App* run = app.add_subcommand("run", "run every seed of an experiment, write trace CSVs");
  add_experiment_options(run, run_opt);
  CLI::App* mse = app.add_subcommand("mse", "MSE curve against the oracle truth across seeds");
  add_experiment_options(mse, mse_opt);

  CLI::App* fixtures =
      app.add_subcommand("fixtures", "write the ground-truth values of the bundled experiments");
  fixtures->add_option("--out", fix_opt.out_dir, "output directory (default: out)");
  fixtures->add_flag("--force", fix_opt.force, "overwrite an existing fixtures file");

  std::string grad_case = "all";
  int grad_n = 100000;
  std::uint64_t grad_seed = 1;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "gradient estimator against closed-form oracles");
  gradcheck->add_option("--case", grad_case, "gaussian-opt, gauss1d, score-fd, or all");
  gradcheck->add_option("--n", grad_n, "Monte Carlo sample size")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", grad_seed, "sampling seed");

  try {
    app.parse(argc, argv);
    if (list_presets) {
      for (const std::string& name : adaoais::preset_names()) std::cout << name << "\n";
      return adaoais::kExitOk;
    }
    if (run->parsed()) return adaoais::cmd_run(run_opt, std::cout);
    if (mse->parsed()) return adaoais::cmd_mse(mse_opt, std::cout);
    if (fixtures->parsed()) return adaoais::cmd_fixtures(fix_opt, std::cout);
    if (gradcheck->parsed()) return adaoais::cmd_gradcheck(grad_case, grad_n, grad_seed, std::cout);
    std::cerr << app.help();
    return adaoais::kExitError;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const adaoais::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return adaoais::kExitError;
  } catch (const adaoais::AccuracyError& e) {
    std::cerr << "accuracy error: " << e.what() << "\n";
    return adaoais::kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return adaoais::kExitError;
  }
}
