// digirap <experiment> --config <file> [--out <dir>] [--threads <k>]
//
// Exit codes: 0 success, 1 usage, 2 invalid configuration, 3 numerical
// failure, 4 I/O failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "digirap/config.hpp"
#include "digirap/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInvalidConfig = 2, kNumerical = 3, kIo = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace digirap;

  CLI::App app{"Digitized rapid adiabatic passage experiments"};
  app.set_version_flag("--version", std::string(version));

  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());

  std::vector<std::string> names(std::begin(cli::experiment_names), std::end(cli::experiment_names));
  app.add_option("experiment", experiment, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("-c,--config", config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("-j,--threads", threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << '\n';
    return kIo;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  const auto validation = cli::validate_config(buffer.str(), cli::parse_experiment(experiment));
  if (!validation.ok()) {
    for (const auto& d : validation.diagnostics) {
      std::cerr << config_path << ": " << d.to_string() << '\n';
    }
    return kInvalidConfig;
  }
  const auto& config = *validation.config;
  const std::filesystem::path dir = out_dir.empty() ? config.output_directory : out_dir;

  try {
    const auto result = cli::run_experiment(config, dir, threads);
    for (const auto& p : result.outputs) std::cout << p.string() << '\n';
    std::cerr << "done in " << result.wall_clock_seconds << " s\n";
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
