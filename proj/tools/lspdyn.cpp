// Command-line front end: run <config>, preset <name>, validate <config>.

#include <iostream>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "cli/output.hpp"
#include "cli/presets.hpp"
#include "cli/runner.hpp"
#include "lspdyn/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace lspdyn;
  CLI::App app{"Emitter dynamics near a plasmonic nanosphere"};
  app.set_version_flag("--version", std::string(cli::version()));
  app.require_subcommand(1);

  cli::RunOptions options;
  std::string out_dir;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--workers", options.workers, "Worker threads for sweeps and tables")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "Output directory (overrides output.directory)");
    sub->add_flag("--emit-plots", options.emit_plots, "Write SVG plots next to the data");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a configuration file");
  run->add_option("config", config_path, "YAML or JSON configuration")->required();
  add_run_flags(run);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Run a built-in figure preset");
  preset->add_option("name", preset_name, "fig2, fig3 or fig4")->required();
  add_run_flags(preset);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a configuration file without running it");
  validate->add_option("config", validate_path, "YAML or JSON configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (!out_dir.empty()) options.out_dir = out_dir;

  try {
    if (*validate) {
      const auto cfg = cli::load_config(validate_path);
      for (const auto& n : cfg.notes) std::cout << "note: " << n << '\n';
      std::cout << cli::dump(cli::to_json(cfg));
      return kExitOk;
    }
    std::vector<cli::RunConfig> jobs;
    if (*run)
      jobs.push_back(cli::load_config(config_path));
    else
      jobs = cli::preset(preset_name);
    const auto report = cli::run_jobs(jobs, options, std::cerr);
    std::cerr << report.files.size() << " file(s) written, " << report.warnings.size() << " warning(s)\n";
    return kExitOk;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (is_numerical(e.code())) return kExitNumerical;
    return e.code() == Errc::domain || e.code() == Errc::config ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
