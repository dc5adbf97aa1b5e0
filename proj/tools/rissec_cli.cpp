// Command-line front end: `rissec run` executes a scenario grid, `rissec summarize` aggregates CSVs.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "rissec/experiment.hpp"

namespace fs = std::filesystem;
using namespace rissec;

namespace {

fs::path default_out_dir() {
  const char *env = std::getenv("RISSEC_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("results");
}

std::vector<fs::path> expand_inputs(const std::vector<std::string> &inputs) {
  std::vector<fs::path> files;
  for (const auto &in : inputs) {
    const fs::path p(in);
    if (!fs::is_directory(p)) {
      if (!fs::exists(p)) throw std::runtime_error("no such file: " + in);
      files.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto &entry : fs::directory_iterator(p)) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() == ".csv" && name.rfind("summary_", 0) != 0) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw std::runtime_error("no CSV inputs found");
  return files;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"RIS-aided full-duplex secure beamforming: DDPG/TD3 training and figure scenarios"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "Run a scenario over a seed list and write CSVs");
  std::string scenario = "convergence";
  std::string seeds = "1-5";
  std::string out;
  std::string config;
  std::vector<std::string> overrides;
  int threads = 0;
  bool list_keys = false;
  run->add_option("-s,--scenario", scenario, "Scenario id")
      ->check(CLI::IsMember(scenario_names()))
      ->capture_default_str();
  run->add_option("--seeds", seeds, "Seed list, e.g. 1-5 or 1,3,7")->capture_default_str();
  run->add_option("-o,--out", out, "Output directory (default: $RISSEC_OUT_DIR or ./results)");
  run->add_option("-c,--config", config, "Flat key = value config file");
  run->add_option("--set", overrides, "Dotted override key=value (repeatable), e.g. --set power.p_max=30dBm");
  run->add_option("-j,--threads", threads, "Worker threads (0: all hardware threads)")->capture_default_str();
  run->add_flag("--list-keys", list_keys, "Print every config key with its resolved value and exit");

  auto *summ = app.add_subcommand("summarize", "Aggregate sweep and reward CSVs");
  std::vector<std::string> inputs;
  std::string summary_out;
  summ->add_option("inputs", inputs, "CSV files or directories")->required();
  summ->add_option("-o,--out", summary_out, "Directory for summary CSVs (default: $RISSEC_OUT_DIR or ./results)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentSpec spec;
      spec.scenario = scenario;
      spec.settings = scenario_defaults(scenario);
      if (!config.empty()) apply_config_file(spec.settings, config);
      for (const auto &o : overrides) apply_assignment(spec.settings, o);
      if (list_keys) {
        for (const auto &[k, v] : describe(spec.settings)) std::cout << k << " = " << v << '\n';
        return 0;
      }
      spec.seeds = parse_seeds(seeds);
      spec.out_dir = out.empty() ? default_out_dir() : fs::path(out);
      spec.threads = threads;
      const auto result = run_scenario(spec);
      for (const auto &f : result.files) std::cout << f.string() << '\n';
    } else {
      const auto summary = summarize(expand_inputs(inputs));
      const fs::path dir = summary_out.empty() ? default_out_dir() : fs::path(summary_out);
      for (const auto &f : write_summary(summary, dir)) std::cout << f.string() << '\n';
      for (const auto &s : summary.sweeps)
        std::cout << s.sweep_param << '=' << format_number(s.sweep_value) << ' ' << s.scheme << ": mean "
                  << s.mean << " std " << s.stddev << " (n=" << s.count << ")\n";
      for (const auto &c : summary.convergence)
        std::cout << c.file << " seed " << c.seed << ": converged at step " << c.convergence_step << " of "
                  << c.steps << '\n';
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
