#include "rissec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace rissec {

namespace {

// RNG streams per seed. Keeping them apart is what makes schemes share channels.
constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kChannelStream = 2;
constexpr std::uint64_t kEnvStream = 3;
constexpr std::uint64_t kAgentStream = 4;
constexpr std::uint64_t kSearchStream = 5;
constexpr std::uint64_t kInitStream = 1000;

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<double> to_double(const std::string &text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  char *end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string join(const std::vector<std::string> &items, const std::string &sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

struct Range {
  double lo, hi;
  bool lo_open = false;
  std::string text() const {
    return std::string(lo_open ? "(" : "[") + format_number(lo) + ", " + format_number(hi) + "]";
  }
  bool contains(double v) const { return (lo_open ? v > lo : v >= lo) && v <= hi; }
};

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const std::string &expected) {
  throw ConfigError("config key '" + key + "': invalid value '" + value + "', expected " + expected);
}

double number_in(const std::string &key, const std::string &value, Range range) {
  const auto v = to_double(value);
  if (!v) bad_value(key, value, "a number in " + range.text());
  if (!range.contains(*v))
    throw ConfigError("config key '" + key + "': value " + trim(value) + " out of range " + range.text());
  return *v;
}

int integer_in(const std::string &key, const std::string &value, int lo, int hi) {
  const double v = number_in(key, value, {double(lo), double(hi)});
  if (v != std::floor(v)) bad_value(key, value, "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

bool boolean(const std::string &key, const std::string &value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "true or false");
}

double power_in(const std::string &key, const std::string &value, bool allow_zero) {
  double w = 0.0;
  try {
    w = parse_power(value);
  } catch (const ConfigError &) {
    bad_value(key, value, "a power such as 20dBm, 100mW or 0.1W");
  }
  const Range r{0.0, 1e6, !allow_zero};
  if (!r.contains(w)) throw ConfigError("config key '" + key + "': value " + trim(value) + " out of range " + r.text() + " W");
  return w;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string list_text(const std::vector<double> &v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(format_number(x));
  return join(parts, ",");
}

struct Key {
  std::string name;
  std::function<void(Settings &, const std::string &)> set;
  std::function<std::string(const Settings &)> get;
};

#define RISSEC_NUM(KEY, FIELD, LO, HI, OPEN)                                                      \
  Key {                                                                                           \
    KEY, [](Settings &s, const std::string &v) { s.FIELD = number_in(KEY, v, {LO, HI, OPEN}); }, \
        [](const Settings &s) { return format_number(s.FIELD); }                                  \
  }
#define RISSEC_INT(KEY, FIELD, LO, HI)                                                        \
  Key {                                                                                       \
    KEY, [](Settings &s, const std::string &v) { s.FIELD = integer_in(KEY, v, LO, HI); },    \
        [](const Settings &s) { return std::to_string(s.FIELD); }                             \
  }
#define RISSEC_BOOL(KEY, FIELD)                                                         \
  Key {                                                                                 \
    KEY, [](Settings &s, const std::string &v) { s.FIELD = boolean(KEY, v); },          \
        [](const Settings &s) { return bool_text(s.FIELD); }                            \
  }

const std::vector<Key> &keys() {
  static const std::vector<Key> table = {
      RISSEC_INT("system.K", sizes.K, 1, 16),
      RISSEC_INT("system.L", sizes.L, 1, 16),
      RISSEC_INT("system.M", sizes.M, 1, 256),
      RISSEC_INT("system.Nt", sizes.Nt, 1, 64),
      RISSEC_INT("system.Nr", sizes.Nr, 1, 64),
      Key{"power.p_max", [](Settings &s, const std::string &v) { s.p_max = power_in("power.p_max", v, false); },
          [](const Settings &s) { return format_number(s.p_max); }},
      Key{"power.user", [](Settings &s, const std::string &v) { s.user_power = power_in("power.user", v, true); },
          [](const Settings &s) { return format_number(s.user_power); }},
      Key{"hwi.kappa",
          [](Settings &s, const std::string &v) { s.kappa_tx = s.kappa_rx = number_in("hwi.kappa", v, {0.0, 1.0}); },
          nullptr},
      RISSEC_NUM("hwi.kappa_tx", kappa_tx, 0.0, 1.0, false),
      RISSEC_NUM("hwi.kappa_rx", kappa_rx, 0.0, 1.0, false),
      RISSEC_NUM("hwi.rho_s", rho_s, 0.0, 1.0, false),
      RISSEC_NUM("channel.alpha", channel.path_loss_exponent, 0.0, 10.0, false),
      RISSEC_NUM("channel.pl0_db", channel.pl0_db, -200.0, 0.0, false),
      RISSEC_NUM("channel.rician", channel.rician_factor, 0.0, 1e6, false),
      RISSEC_NUM("channel.spacing", channel.element_spacing, 0.0, 10.0, true),
      RISSEC_NUM("noise.density_dbm_hz", noise_density_dbm_hz, -250.0, 0.0, false),
      RISSEC_NUM("noise.bandwidth_hz", bandwidth_hz, 0.0, 1e12, true),
      RISSEC_BOOL("env.phase_noise_per_step", phase_noise_per_step),
      RISSEC_NUM("agent.gamma", agent.gamma, 0.0, 1.0, false),
      RISSEC_NUM("agent.lr_actor", agent.lr_actor, 0.0, 1.0, true),
      RISSEC_NUM("agent.lr_critic", agent.lr_critic, 0.0, 1.0, true),
      RISSEC_NUM("agent.tau_actor", agent.tau_actor, 0.0, 1.0, false),
      RISSEC_NUM("agent.tau_critic", agent.tau_critic, 0.0, 1.0, false),
      RISSEC_INT("agent.batch", agent.batch, 1, 1000000),
      RISSEC_INT("agent.capacity", agent.capacity, 1, 100000000),
      RISSEC_INT("agent.steps", agent.steps, 1, 100000000),
      RISSEC_INT("agent.episodes", agent.episodes, 1, 1000),
      RISSEC_INT("agent.hidden", agent.hidden, 1, 4096),
      RISSEC_NUM("agent.noise_sigma0", agent.noise.sigma0, 0.0, 10.0, false),
      RISSEC_NUM("agent.noise_decay", agent.noise.decay, 0.0, 1.0, false),
      RISSEC_NUM("agent.noise_floor", agent.noise.floor, 0.0, 10.0, false),
      RISSEC_BOOL("agent.clear_buffer", agent.clear_buffer_each_episode),
      RISSEC_BOOL("agent.reinit_networks", agent.reinit_networks_each_episode),
      RISSEC_INT("agent.policy_delay", agent.policy_delay, 1, 100),
      RISSEC_NUM("agent.target_noise", agent.target_noise, 0.0, 10.0, false),
      RISSEC_NUM("agent.target_noise_clip", agent.target_noise_clip, 0.0, 10.0, false),
      RISSEC_NUM("run.smoothing", smoothing, 0.0, 1.0, false),
      RISSEC_INT("sweep.steps", sweep_steps, 1, 100000000),
      Key{"sweep.values",
          [](Settings &s, const std::string &v) {
            std::vector<double> values;
            for (const auto &part : split(v, ',')) {
              const auto x = to_double(part);
              if (!x) bad_value("sweep.values", v, "a comma-separated list of numbers");
              values.push_back(*x);
            }
            if (values.empty()) bad_value("sweep.values", v, "at least one number");
            s.sweep_values = values;
          },
          [](const Settings &s) { return list_text(s.sweep_values); }},
      Key{"sweep.schemes",
          [](Settings &s, const std::string &v) {
            std::vector<std::string> names = split(v, ',');
            if (names.empty()) bad_value("sweep.schemes", v, "one or more of " + join(scheme_names(), ", "));
            for (const auto &n : names)
              if (std::find(scheme_names().begin(), scheme_names().end(), n) == scheme_names().end())
                bad_value("sweep.schemes", v, "one or more of " + join(scheme_names(), ", "));
            s.schemes = names;
          },
          [](const Settings &s) { return join(s.schemes, ","); }},
      RISSEC_INT("init.count", init_count, 1, 1000),
  };
  return table;
}

#undef RISSEC_NUM
#undef RISSEC_INT
#undef RISSEC_BOOL

const Key *find_key(const std::string &name) {
  for (const auto &k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

std::string sweep_param(const std::string &scenario) {
  static const std::map<std::string, std::string> params = {
      {"ssr_vs_pmax", "p_max_dbm"}, {"ssr_vs_kappa", "kappa"}, {"ssr_vs_M", "M"},       {"ssr_vs_alpha", "alpha"},
      {"lr_sweep", "lr"},           {"gamma_sweep", "gamma"},  {"init_robustness", "init"}};
  const auto it = params.find(scenario);
  return it == params.end() ? "none" : it->second;
}

Settings with_sweep(Settings s, const std::string &param, double value) {
  if (param == "p_max_dbm") {
    s.p_max = dbm_to_watts(value);
  } else if (param == "kappa") {
    s.kappa_tx = s.kappa_rx = value;
  } else if (param == "M") {
    s.sizes.M = static_cast<int>(value);
  } else if (param == "alpha") {
    s.channel.path_loss_exponent = value;
  } else if (param == "lr") {
    // one learning rate is swept; the actor keeps half the critic's rate, matching the defaults
    s.agent.lr_critic = value;
    s.agent.lr_actor = value / 2.0;
  } else if (param == "gamma") {
    s.agent.gamma = value;
  }
  return s;
}

bool scenario_writes_rewards(const std::string &scenario) {
  return scenario == "convergence" || scenario == "lr_sweep" || scenario == "gamma_sweep" ||
         scenario == "init_robustness";
}

struct Job {
  std::uint64_t seed;
  std::string param;
  double value;
  std::string scheme;
};

std::vector<Job> grid(const ExperimentSpec &spec) {
  const std::string param = sweep_param(spec.scenario);
  std::vector<double> values = spec.settings.sweep_values;
  if (param == "none") values = {0.0};
  if (param == "init") {
    values.clear();
    for (int i = 0; i < spec.settings.init_count; ++i) values.push_back(i);
  }
  std::vector<Job> jobs;
  for (auto seed : spec.seeds)
    for (double v : values)
      for (const auto &scheme : spec.settings.schemes) jobs.push_back({seed, param, v, scheme});
  return jobs;
}

EpisodeLog run_job(const ExperimentSpec &spec, const Job &job) {
  const Settings s = with_sweep(spec.settings, job.param, job.value);
  const int steps = spec.scenario == "convergence" ? s.agent.steps : s.sweep_steps;
  if (job.param != "init") return run_scheme(job.scheme, s, job.seed, steps);

  // same system, different starting action and network initialization
  const auto index = static_cast<std::uint64_t>(job.value);
  const EnvConfig cfg = make_env_config(s, job.seed);
  Rng init_rng = make_rng(job.seed, kInitStream + index);
  const Action a0 = Environment(cfg).random_action(init_rng);
  return run_scheme(job.scheme, s, job.seed, steps, a0, index + 1);
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path &path, const std::string &comment, const std::string &header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << comment << '\n' << header << '\n';
  }
  std::ofstream &row() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string comment_line(const ExperimentSpec &spec) {
  std::vector<std::string> seeds;
  for (auto s : spec.seeds) seeds.push_back(std::to_string(s));
  std::string line = "# scenario=" + spec.scenario + " seeds=" + join(seeds, ",");
  for (const auto &[k, v] : describe(spec.settings)) line += " " + k + "=" + v;
  return line;
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

const std::vector<std::string> &scenario_names() {
  static const std::vector<std::string> names = {"convergence", "ssr_vs_pmax", "ssr_vs_kappa",
                                                 "ssr_vs_M",    "ssr_vs_alpha", "cdf",
                                                 "lr_sweep",    "gamma_sweep",  "init_robustness"};
  return names;
}

const std::vector<std::string> &scheme_names() {
  static const std::vector<std::string> names = {"ddpg_fd", "ddpg_hd", "td3_fd", "td3_hd",
                                                 "fixed_phase_fd", "fixed_phase_hd", "random"};
  return names;
}

bool is_scenario(const std::string &name) {
  return std::find(scenario_names().begin(), scenario_names().end(), name) != scenario_names().end();
}

Settings scenario_defaults(const std::string &scenario) {
  if (!is_scenario(scenario))
    throw ConfigError("unknown scenario '" + scenario + "', expected one of " + join(scenario_names(), ", "));
  Settings s;
  const std::vector<std::string> comparison = {"ddpg_fd", "td3_fd", "fixed_phase_fd", "ddpg_hd", "random"};
  s.schemes = {"ddpg_fd"};
  if (scenario == "ssr_vs_pmax") {
    s.sweep_values = {10, 20, 30, 40};
    s.schemes = comparison;
  } else if (scenario == "ssr_vs_kappa") {
    s.p_max = dbm_to_watts(30.0);
    s.sweep_values = {0.01, 0.05, 0.1};
    s.schemes = comparison;
  } else if (scenario == "ssr_vs_M") {
    s.p_max = dbm_to_watts(10.0);
    s.sweep_values = {8, 16, 32};
  } else if (scenario == "ssr_vs_alpha") {
    s.sweep_values = {2.0, 2.2, 2.4, 2.6, 2.8};
  } else if (scenario == "cdf") {
    s.schemes = comparison;
  } else if (scenario == "lr_sweep") {
    s.sweep_values = {0.1, 0.01, 0.001, 0.0001, 0.00001};
  } else if (scenario == "gamma_sweep") {
    s.sweep_values = {0.3, 0.5, 0.7, 0.9};
  }
  return s;
}

void apply_setting(Settings &settings, const std::string &key, const std::string &value) {
  const Key *k = find_key(trim(key));
  if (!k) throw ConfigError("unknown config key '" + trim(key) + "'");
  k->set(settings, value);
}

void apply_assignment(Settings &settings, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  apply_setting(settings, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_config_file(Settings &settings, const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    try {
      apply_assignment(settings, line);
    } catch (const ConfigError &e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> names;
  for (const auto &k : keys()) names.push_back(k.name);
  return names;
}

std::vector<std::pair<std::string, std::string>> describe(const Settings &settings) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &k : keys())
    if (k.get) out.emplace_back(k.name, k.get(settings));
  return out;
}

double parse_power(const std::string &text) {
  const std::string t = trim(text);
  struct Unit {
    const char *suffix;
    std::function<double(double)> to_watts;
  };
  const Unit units[] = {{"dBm", [](double v) { return dbm_to_watts(v); }},
                        {"mW", [](double v) { return v * 1e-3; }},
                        {"W", [](double v) { return v; }}};
  for (const auto &u : units)
    if (ends_with(t, u.suffix)) {
      const auto v = to_double(t.substr(0, t.size() - std::char_traits<char>::length(u.suffix)));
      if (!v) throw ConfigError("cannot parse power '" + text + "'");
      return u.to_watts(*v);
    }
  const auto v = to_double(t);
  if (!v) throw ConfigError("cannot parse power '" + text + "'");
  return *v;
}

std::vector<std::uint64_t> parse_seeds(const std::string &text) {
  std::vector<std::uint64_t> seeds;
  auto integer = [&](const std::string &s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ConfigError("bad seed list '" + text + "': '" + s + "' is not a nonnegative integer");
    return v;
  };
  for (const auto &part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(integer(part));
      continue;
    }
    const auto lo = integer(trim(part.substr(0, dash)));
    const auto hi = integer(trim(part.substr(dash + 1)));
    if (hi < lo || hi - lo > 100000) throw ConfigError("bad seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

void ExperimentSpec::validate() const {
  if (!is_scenario(scenario))
    throw ConfigError("unknown scenario '" + scenario + "', expected one of " + join(scenario_names(), ", "));
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (settings.schemes.empty()) throw ConfigError("sweep.schemes is empty");
  const std::string param = sweep_param(scenario);
  if (param != "none" && param != "init" && settings.sweep_values.empty())
    throw ConfigError("sweep.values is empty");
  if (param == "M")
    for (double v : settings.sweep_values)
      if (v < 1 || v != std::floor(v)) throw ConfigError("sweep.values: M must be a positive integer");
  try {
    for (double v : param == "none" || param == "init" ? std::vector<double>{0.0} : settings.sweep_values) {
      const Settings s = with_sweep(settings, param, v);
      make_env_config(s, 0).validate();
      AgentConfig a = s.agent;
      a.steps = scenario == "convergence" ? a.steps : s.sweep_steps;
      a.validate();
    }
  } catch (const ContractViolation &e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

EnvConfig make_env_config(const Settings &s, std::uint64_t seed) {
  EnvConfig c;
  c.sizes = s.sizes;
  c.physical.p_max = s.p_max;
  c.physical.user_power.assign(s.sizes.K, s.user_power);
  c.physical.hwi = HwiConfig::uniform(s.sizes.K, s.kappa_tx, s.rho_s);
  c.physical.hwi.kappa_rx_bs = s.kappa_rx;
  c.physical.hwi.kappa_rx_user.assign(s.sizes.K, s.kappa_rx);
  c.physical.noise = NoiseConfig::from_density(s.noise_density_dbm_hz, s.bandwidth_hz);
  c.channel = s.channel;
  Rng g = make_rng(seed, kGeometryStream);
  c.geometry = random_geometry(g, s.sizes.K, s.sizes.L);
  c.phase_noise_per_step = s.phase_noise_per_step;
  return c;
}

ChannelSet seed_channels(const EnvConfig &config, std::uint64_t seed) {
  Rng rng = make_rng(seed, kChannelStream);
  return sample_channel_set(rng, config.geometry, config.channel, config.sizes);
}

EpisodeLog run_scheme(const std::string &scheme, const Settings &settings, std::uint64_t seed, int steps,
                      const std::optional<Action> &initial_action, std::uint64_t agent_stream_offset) {
  if (std::find(scheme_names().begin(), scheme_names().end(), scheme) == scheme_names().end())
    throw ConfigError("unknown scheme '" + scheme + "'");
  EnvConfig cfg = make_env_config(settings, seed);
  RunOptions options;
  options.smoothing = settings.smoothing;
  options.channels = seed_channels(cfg, seed);
  options.initial_action = initial_action;
  if (ends_with(scheme, "_hd")) cfg = half_duplex_config(cfg);
  if (scheme.rfind("fixed_phase", 0) == 0) cfg = fixed_phase_config(cfg);
  Environment env(cfg);
  Rng env_rng = make_rng(seed, kEnvStream);

  if (scheme == "random") {
    Rng search = make_rng(seed, kSearchStream);
    return run_random_search(env, steps, env_rng, search, options);
  }
  AgentConfig ac = settings.agent;
  ac.steps = steps;
  ac.algorithm = scheme.rfind("td3", 0) == 0 ? Algorithm::td3 : Algorithm::ddpg;
  Rng agent_rng = make_rng(seed, kAgentStream + 100 * agent_stream_offset);
  Agent agent = Agent::for_env(env, ac, agent_rng);
  return run_training(agent, env, env_rng, agent_rng, options);
}

ScenarioResult run_scenario(const ExperimentSpec &spec) {
  spec.validate();
  const std::vector<Job> jobs = grid(spec);
  std::vector<EpisodeLog> logs(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  int threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        logs[i] = run_job(spec, jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);

  ScenarioResult result;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    result.runs.push_back({jobs[i].seed, jobs[i].param, jobs[i].value, jobs[i].scheme, std::move(logs[i])});

  std::filesystem::create_directories(spec.out_dir);
  const std::string comment = comment_line(spec);

  const auto sweep_path = spec.out_dir / "sweep.csv";
  CsvFile sweep(sweep_path, comment, "seed,sweep_param,sweep_value,scheme,best_ssr");
  for (const auto &r : result.runs)
    sweep.row() << r.seed << ',' << r.sweep_param << ',' << format_number(r.sweep_value) << ',' << r.scheme << ','
                << format_number(r.log.best_reward) << '\n';
  sweep.close();
  result.files.push_back(sweep_path);

  if (scenario_writes_rewards(spec.scenario)) {
    // one reward file per (scheme, sweep point); rows ordered by seed then step
    std::map<std::string, std::vector<const RunRecord *>> groups;
    std::vector<std::string> order;
    for (const auto &r : result.runs) {
      std::string name = "reward_" + r.scheme;
      if (r.sweep_param != "none") name += "_" + r.sweep_param + "_" + format_number(r.sweep_value);
      name += ".csv";
      if (!groups.count(name)) order.push_back(name);
      groups[name].push_back(&r);
    }
    for (const auto &name : order) {
      const auto path = spec.out_dir / name;
      CsvFile f(path, comment, "seed,step,instant_reward,average_reward");
      for (const RunRecord *r : groups[name])
        for (std::size_t t = 0; t < r->log.instant.size(); ++t)
          f.row() << r->seed << ',' << t << ',' << format_number(r->log.instant[t]) << ','
                  << format_number(r->log.average[t]) << '\n';
      f.close();
      result.files.push_back(path);
    }
  }

  if (spec.scenario == "cdf") {
    const auto path = spec.out_dir / "cdf.csv";
    CsvFile f(path, comment, "seed,scheme,step,instant_reward,best_ssr");
    for (const auto &r : result.runs)
      for (std::size_t t = 0; t < r.log.instant.size(); ++t)
        f.row() << r.seed << ',' << r.scheme << ',' << t << ',' << format_number(r.log.instant[t]) << ','
                << format_number(r.log.best_so_far[t]) << '\n';
    f.close();
    result.files.push_back(path);
  }
  return result;
}

std::vector<double> moving_average(const std::vector<double> &values, int window) {
  require(window >= 1, "moving_average: window must be >= 1");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<std::size_t>(window)) acc -= values[i - window];
    out[i] = acc / static_cast<double>(std::min<std::size_t>(i + 1, window));
  }
  return out;
}

long long convergence_step(const std::vector<double> &instant, int window, double fraction) {
  require(!instant.empty(), "convergence_step: empty reward stream");
  const auto ma = moving_average(instant, window);
  const double target = fraction * ma.back();
  for (std::size_t i = 0; i < ma.size(); ++i)
    if (ma[i] >= target) return static_cast<long long>(i);
  return static_cast<long long>(ma.size()) - 1;
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // (line number, cells)
};

Table read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Table t;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error(path.string() + ": malformed row " + std::to_string(number) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    t.rows.emplace_back(number, std::move(cells));
  }
  if (t.header.empty()) throw std::runtime_error(path.string() + ": no header row");
  return t;
}

int column(const Table &t, const std::string &name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  return it == t.header.end() ? -1 : static_cast<int>(it - t.header.begin());
}

double cell_number(const std::filesystem::path &path, int row, const std::string &cell) {
  const auto v = to_double(cell);
  if (!v) throw std::runtime_error(path.string() + ": malformed row " + std::to_string(row) + ": '" + cell +
                                   "' is not a number");
  return *v;
}

std::uint64_t cell_seed(const std::filesystem::path &path, int row, const std::string &cell) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || r.ec != std::errc() || r.ptr != cell.data() + cell.size())
    throw std::runtime_error(path.string() + ": malformed row " + std::to_string(row) + ": bad seed '" + cell + "'");
  return v;
}

}  // namespace

Summary summarize(const std::vector<std::filesystem::path> &inputs) {
  Summary summary;
  std::map<std::tuple<std::string, double, std::string>, std::vector<double>> points;
  for (const auto &path : inputs) {
    const Table t = read_csv(path);
    const int c_param = column(t, "sweep_param"), c_value = column(t, "sweep_value"),
              c_scheme = column(t, "scheme"), c_best = column(t, "best_ssr"), c_seed = column(t, "seed"),
              c_step = column(t, "step"), c_inst = column(t, "instant_reward"), c_avg = column(t, "average_reward");
    if (c_param >= 0 && c_value >= 0 && c_scheme >= 0 && c_best >= 0 && c_seed >= 0) {
      for (const auto &[row, cells] : t.rows) {
        cell_seed(path, row, cells[c_seed]);
        points[{cells[c_param], cell_number(path, row, cells[c_value]), cells[c_scheme]}].push_back(
            cell_number(path, row, cells[c_best]));
      }
    } else if (c_seed >= 0 && c_step >= 0 && c_inst >= 0 && c_avg >= 0 && c_scheme < 0) {
      std::map<std::uint64_t, std::pair<std::vector<double>, double>> runs;
      for (const auto &[row, cells] : t.rows) {
        auto &run = runs[cell_seed(path, row, cells[c_seed])];
        const double step = cell_number(path, row, cells[c_step]);
        if (step != static_cast<double>(run.first.size()))
          throw std::runtime_error(path.string() + ": malformed row " + std::to_string(row) + ": step " +
                                   cells[c_step] + " out of sequence");
        run.first.push_back(cell_number(path, row, cells[c_inst]));
        run.second = cell_number(path, row, cells[c_avg]);
      }
      for (const auto &[seed, run] : runs)
        summary.convergence.push_back({path.filename().string(), seed, static_cast<long long>(run.first.size()),
                                       convergence_step(run.first), run.second});
    } else if (c_seed >= 0 && c_scheme >= 0 && c_step >= 0 && c_best >= 0) {
      // per-step CDF samples; nothing to aggregate
    } else {
      throw std::runtime_error(path.string() + ": unrecognized header '" + join(t.header, ",") + "'");
    }
  }
  for (const auto &[key, values] : points) {
    SweepSummary s;
    std::tie(s.sweep_param, s.sweep_value, s.scheme) = key;
    s.count = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.count;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    summary.sweeps.push_back(s);
  }
  return summary;
}

std::vector<std::filesystem::path> write_summary(const Summary &summary, const std::filesystem::path &out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string comment = "# summary";
  const auto sweep_path = out_dir / "summary_sweep.csv";
  CsvFile sweep(sweep_path, comment, "sweep_param,sweep_value,scheme,count,mean,std,min,max");
  for (const auto &s : summary.sweeps)
    sweep.row() << s.sweep_param << ',' << format_number(s.sweep_value) << ',' << s.scheme << ',' << s.count << ','
                << format_number(s.mean) << ',' << format_number(s.stddev) << ',' << format_number(s.min) << ','
                << format_number(s.max) << '\n';
  sweep.close();
  const auto conv_path = out_dir / "summary_convergence.csv";
  CsvFile conv(conv_path, comment, "file,seed,steps,convergence_step,final_average_reward");
  for (const auto &c : summary.convergence)
    conv.row() << c.file << ',' << c.seed << ',' << c.steps << ',' << c.convergence_step << ','
               << format_number(c.final_average) << '\n';
  conv.close();
  return {sweep_path, conv_path};
}

}  // namespace rissec
