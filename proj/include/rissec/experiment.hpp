#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rissec/agents.hpp"

namespace rissec {

/// Bad configuration input: unknown key, unparsable or out-of-range value, bad seed list.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every knob an experiment exposes, in resolved (SI) units.
struct Settings {
  Sizes sizes;
  double p_max = 0.1;         // W (20 dBm)
  double user_power = 0.1;    // P_k, W (100 mW)
  double kappa_tx = 0.01;     // kappa_d^S and kappa_u^B
  double kappa_rx = 0.01;     // kappa_u^S and kappa_d^B
  double rho_s = 1.0;
  ChannelParams channel;
  double noise_density_dbm_hz = -174.0;
  double bandwidth_hz = 1e7;
  bool phase_noise_per_step = true;
  AgentConfig agent;
  double smoothing = 0.995;   // average-reward factor
  int sweep_steps = 5000;     // T for every scenario except convergence
  std::vector<double> sweep_values;        // empty: scenario default
  std::vector<std::string> schemes;        // empty: scenario default
  int init_count = 5;
};

const std::vector<std::string> &scenario_names();
const std::vector<std::string> &scheme_names();
bool is_scenario(const std::string &name);

/// Reference defaults with the scenario's preset applied (e.g. P_max = 30 dBm for ssr_vs_kappa).
Settings scenario_defaults(const std::string &scenario);

/// Set one dotted key from its text form. Throws ConfigError naming the key and, for bad
/// values, the accepted range.
void apply_setting(Settings &settings, const std::string &key, const std::string &value);
/// Apply "key=value" text.
void apply_assignment(Settings &settings, const std::string &assignment);
/// Flat key = value file; '#' starts a comment.
void apply_config_file(Settings &settings, const std::filesystem::path &path);

std::vector<std::string> setting_keys();
/// Resolved configuration as ordered (key, value) pairs.
std::vector<std::pair<std::string, std::string>> describe(const Settings &settings);

/// "20dBm", "100mW", "0.1W" or a bare number of watts.
double parse_power(const std::string &text);
/// "1,2,3", "1-5" or a mix such as "1-3,7".
std::vector<std::uint64_t> parse_seeds(const std::string &text);

/// Shortest text that reads back to the same double.
std::string format_number(double value);

struct ExperimentSpec {
  std::string scenario = "convergence";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path out_dir = "results";
  Settings settings = scenario_defaults("convergence");
  int threads = 0;  // 0: one per hardware thread; never affects output bytes

  void validate() const;
};

/// Environment for one seed. The geometry depends only on the seed, so every scheme and
/// sweep point of a seed sees the same user and eavesdropper placement.
EnvConfig make_env_config(const Settings &settings, std::uint64_t seed);

/// The channel realization of a seed (common random numbers across schemes).
ChannelSet seed_channels(const EnvConfig &config, std::uint64_t seed);

/// One scheme for one seed under `settings`, T = `steps`.
EpisodeLog run_scheme(const std::string &scheme, const Settings &settings, std::uint64_t seed, int steps,
                      const std::optional<Action> &initial_action = std::nullopt,
                      std::uint64_t agent_stream_offset = 0);

struct RunRecord {
  std::uint64_t seed = 0;
  std::string sweep_param;  // "none" when the scenario has no sweep
  double sweep_value = 0.0;
  std::string scheme;
  EpisodeLog log;
};

struct ScenarioResult {
  std::vector<RunRecord> runs;  // deterministic order: seed, sweep point, scheme
  std::vector<std::filesystem::path> files;
};

/// Runs the scenario grid on a worker pool and writes its CSVs into spec.out_dir.
ScenarioResult run_scenario(const ExperimentSpec &spec);

/// Trailing moving average; the first window-1 entries average what is available.
std::vector<double> moving_average(const std::vector<double> &values, int window);
/// First step at which the moving average reaches `fraction` of its final value.
long long convergence_step(const std::vector<double> &instant, int window = 500, double fraction = 0.95);

struct SweepSummary {
  std::string sweep_param;
  double sweep_value = 0.0;
  std::string scheme;
  int count = 0;
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

struct ConvergenceSummary {
  std::string file;
  std::uint64_t seed = 0;
  long long steps = 0;
  long long convergence_step = 0;
  double final_average = 0.0;
};

struct Summary {
  std::vector<SweepSummary> sweeps;
  std::vector<ConvergenceSummary> convergence;
};

/// Reads sweep files (best_ssr column) and reward files (instant_reward column).
Summary summarize(const std::vector<std::filesystem::path> &inputs);
/// summary_sweep.csv and summary_convergence.csv in out_dir; returns the written paths.
std::vector<std::filesystem::path> write_summary(const Summary &summary, const std::filesystem::path &out_dir);

}  // namespace rissec
