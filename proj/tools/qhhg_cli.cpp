#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qhhg/config.hpp"
#include "qhhg/operators.hpp"
#include "qhhg/pipeline.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int run_command(const std::string& config_path, const std::string& output, int workers,
                bool quiet) {
  qhhg::RunConfig config = qhhg::parse_config(config_path);
  qhhg::PipelineOptions options;
  if (workers >= 0) options.workers = workers;
  if (!output.empty()) options.output_dir = output;
  if (!quiet) options.log = [](const std::string& msg) { std::cerr << "[qhhg] " << msg << "\n"; };
  const qhhg::RunManifest manifest = qhhg::run_pipeline(config, options);
  std::cout << (manifest.directory / "manifest.json").string() << "\n";
  return 0;
}

int export_command(const std::string& manifest_path) {
  for (const auto& path : qhhg::export_figures_data(manifest_path)) {
    std::cout << path.string() << "\n";
  }
  return 0;
}

int validate_command(const std::string& config_path) {
  const qhhg::RunConfig config = qhhg::parse_config(config_path);
  std::cout << config.serialize();
  return 0;
}

int gap_command(const std::string& config_path) {
  const qhhg::RunConfig config = qhhg::parse_config(config_path);
  const double wl = config.pulse.omega_L;
  const double gap = qhhg::mott_gap(config.model);
  const double bandwidth = 4.0 * config.model.t0;
  std::printf("L = %d, U/t0 = %.6g\n", config.model.sites, config.model.U / config.model.t0);
  std::printf("mott_gap      %.10e a.u.  %.6f omega_L\n", gap, gap / wl);
  std::printf("bandwidth_4t0 %.10e a.u.  %.6f omega_L\n", bandwidth, bandwidth / wl);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-optical high-harmonic spectra of a driven Hubbard chain"};
  app.require_subcommand(1);

  std::string config_path;
  std::string manifest_path;
  std::string output;
  int workers = -1;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run the full pipeline for a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Output directory (overrides the config)");
  run->add_option("-w,--workers", workers, "Worker threads, 0 for all cores")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("-q,--quiet", quiet, "No progress messages");

  auto* exp = app.add_subcommand("export", "Write figure CSVs from a finished run");
  exp->add_option("manifest", manifest_path, "manifest.json of the run")->required();

  auto* validate = app.add_subcommand("validate", "Parse and print a config");
  validate->add_option("config", config_path, "Config file")->required();

  auto* gap = app.add_subcommand("gap", "Mott gap and hopping bandwidth for a config");
  gap->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, output, workers, quiet);
    if (*exp) return export_command(manifest_path);
    if (*validate) return validate_command(config_path);
    if (*gap) return gap_command(config_path);
  } catch (const qhhg::StageError& e) {
    std::cerr << "error: stage " << e.what() << "\n";
    switch (e.cause()) {
      case qhhg::StageError::Cause::parameter: return kExitConfig;
      case qhhg::StageError::Cause::numerical: return kExitNumerical;
      case qhhg::StageError::Cause::other: return kExitOther;
    }
  } catch (const qhhg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qhhg::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qhhg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
