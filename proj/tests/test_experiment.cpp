#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rissec/experiment.hpp"

using namespace rissec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("rissec_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Data rows: everything after the comment line and the header.
std::vector<std::string> data_rows(const fs::path &p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  std::string line;
  int skipped = 0;
  while (std::getline(in, line)) {
    if (skipped < 2) {
      ++skipped;
      continue;
    }
    if (!line.empty()) rows.push_back(line);
  }
  return rows;
}

ExperimentSpec quick_spec(const std::string &scenario, const fs::path &out) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.settings = scenario_defaults(scenario);
  spec.seeds = {1};
  spec.out_dir = out;
  spec.threads = 1;
  apply_assignment(spec.settings, "agent.steps=200");
  apply_assignment(spec.settings, "sweep.steps=200");
  apply_assignment(spec.settings, "agent.batch=32");
  return spec;
}

void write_file(const fs::path &p, const std::string &text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_SUITE("experiment_cli") {
  TEST_CASE("defaults reproduce the reference configuration") {
    const Settings s = scenario_defaults("convergence");
    CHECK(s.sizes.M == 8);
    CHECK(s.sizes.Nt == 4);
    CHECK(s.sizes.Nr == 4);
    CHECK(s.sizes.K == 2);
    CHECK(s.sizes.L == 2);
    CHECK(s.p_max == doctest::Approx(0.1));
    CHECK(s.user_power == doctest::Approx(0.1));
    CHECK(s.kappa_tx == 0.01);
    CHECK(s.kappa_rx == 0.01);
    CHECK(s.channel.path_loss_exponent == 2.0);
    CHECK(s.channel.pl0_db == -30.0);
    CHECK(s.channel.rician_factor == 10.0);
    CHECK(s.agent.gamma == 0.9);
    CHECK(s.agent.lr_actor == 0.0005);
    CHECK(s.agent.lr_critic == 0.001);
    CHECK(s.agent.batch == 128);
    CHECK(s.agent.capacity == 100000);
    CHECK(s.agent.steps == 20000);
    CHECK(s.smoothing == 0.995);
    // -174 dBm/Hz over 10 MHz is -104 dBm
    const EnvConfig env = make_env_config(s, 1);
    const double kT = std::pow(10.0, (-174.0 - 30.0) / 10.0) * 1e7;
    CHECK(env.physical.noise.sigma2 == doctest::Approx(kT).epsilon(1e-9));
    CHECK(env.physical.noise.sigma2 == doctest::Approx(3.98e-14).epsilon(1e-3));
  }

  TEST_CASE("scenario presets") {
    CHECK(scenario_defaults("ssr_vs_kappa").p_max == doctest::Approx(1.0));
    CHECK(scenario_defaults("ssr_vs_M").p_max == doctest::Approx(0.01));
    CHECK_FALSE(is_scenario("nonsense"));
    CHECK(scenario_names().size() == 9);
  }

  TEST_CASE("power parsing") {
    CHECK(parse_power("20dBm") == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(parse_power("30dBm") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(parse_power("100mW") == doctest::Approx(0.1));
    CHECK(parse_power("0.1W") == 0.1);
    CHECK(parse_power("0.25") == 0.25);
    CHECK_THROWS_AS(parse_power("lots"), ConfigError);
  }

  TEST_CASE("seed lists") {
    CHECK(parse_seeds("1-5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(parse_seeds("3,1") == std::vector<std::uint64_t>{3, 1});
    CHECK(parse_seeds("1-3,7") == std::vector<std::uint64_t>{1, 2, 3, 7});
    CHECK_THROWS_AS(parse_seeds("5-1"), ConfigError);
    CHECK_THROWS_AS(parse_seeds("x"), ConfigError);
    CHECK_THROWS_AS(parse_seeds(""), ConfigError);
  }

  TEST_CASE("config keys are validated") {
    Settings s = scenario_defaults("convergence");
    apply_assignment(s, "agent.gamma=0.5");
    CHECK(s.agent.gamma == 0.5);
    apply_setting(s, "power.p_max", "30dBm");
    CHECK(s.p_max == doctest::Approx(1.0));
    apply_setting(s, "system.M", "16");
    CHECK(s.sizes.M == 16);
    CHECK_THROWS_WITH_AS(apply_setting(s, "agent.gama", "0.5"), doctest::Contains("agent.gama"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_setting(s, "agent.gamma", "1.5"), doctest::Contains("out of range"), ConfigError);
    CHECK_THROWS_AS(apply_setting(s, "system.K", "0"), ConfigError);
    CHECK_THROWS_AS(apply_setting(s, "agent.batch", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_assignment(s, "no_equals_sign"), ConfigError);
    CHECK(s.agent.gamma == 0.5);  // failed assignments leave the value alone
  }

  TEST_CASE("every described key reads back") {
    const Settings s = scenario_defaults("ssr_vs_pmax");
    Settings copy = scenario_defaults("convergence");
    for (const auto &[k, v] : describe(s)) apply_setting(copy, k, v);
    CHECK(describe(copy) == describe(s));
  }

  TEST_CASE("config files") {
    const auto dir = scratch("config");
    write_file(dir / "ok.cfg", "# comment\nagent.gamma = 0.7\n\nsystem.M=16  # trailing\n");
    Settings s = scenario_defaults("convergence");
    apply_config_file(s, dir / "ok.cfg");
    CHECK(s.agent.gamma == 0.7);
    CHECK(s.sizes.M == 16);
    write_file(dir / "bad.cfg", "agent.gamma = 0.7\nbogus.key = 1\n");
    CHECK_THROWS_WITH_AS(apply_config_file(s, dir / "bad.cfg"), doctest::Contains("bogus.key"), ConfigError);
    CHECK_THROWS(apply_config_file(s, dir / "missing.cfg"));
  }

  TEST_CASE("convergence scenario writes T rows per seed") {
    const auto dir = scratch("convergence");
    ExperimentSpec spec = quick_spec("convergence", dir);
    spec.seeds = {1, 2};
    const auto result = run_scenario(spec);
    CHECK(result.runs.size() == 2);
    const auto rows = data_rows(dir / "reward_ddpg_fd.csv");
    CHECK(rows.size() == 2 * 200);
    CHECK(slurp(dir / "reward_ddpg_fd.csv").rfind("# scenario=convergence", 0) == 0);
  }

  TEST_CASE("power sweep gives one point per value, seed and scheme") {
    const auto dir = scratch("pmax");
    ExperimentSpec spec = quick_spec("ssr_vs_pmax", dir);
    apply_assignment(spec.settings, "sweep.schemes=ddpg_fd,random");
    spec.seeds = {1, 2};
    run_scenario(spec);
    const auto rows = data_rows(dir / "sweep.csv");
    CHECK(rows.size() == 4 * 2 * 2);
    for (const auto &r : rows) CHECK(r.find(",p_max_dbm,") != std::string::npos);
  }

  TEST_CASE("reruns are byte-identical for any thread count") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    ExperimentSpec spec = quick_spec("ssr_vs_pmax", a);
    apply_assignment(spec.settings, "sweep.values=10,20");
    apply_assignment(spec.settings, "sweep.schemes=ddpg_fd,fixed_phase_fd");
    run_scenario(spec);
    spec.out_dir = b;
    spec.threads = 2;
    run_scenario(spec);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  }

  TEST_CASE("common channels across schemes") {
    const Settings s = scenario_defaults("convergence");
    const EnvConfig c = make_env_config(s, 3);
    const ChannelSet x = seed_channels(c, 3), y = seed_channels(c, 3), z = seed_channels(c, 4);
    CHECK(x.H_d == y.H_d);
    CHECK(x.H_d != z.H_d);
  }

  TEST_CASE("moving average and convergence step") {
    CHECK(moving_average({2, 4, 6, 8}, 2) == std::vector<double>{2, 3, 5, 7});
    std::vector<double> ramp(1000);
    for (int i = 0; i < 1000; ++i) ramp[i] = std::min(i, 400);
    const long long c = convergence_step(ramp, 50, 0.95);
    CHECK(c >= 0);
    CHECK(c < 1000);
    const auto ma = moving_average(ramp, 50);
    CHECK(ma[c] >= 0.95 * ma.back());
    if (c > 0) CHECK(ma[c - 1] < 0.95 * ma.back());
  }

  TEST_CASE("summaries") {
    const auto dir = scratch("summary");
    write_file(dir / "sweep.csv",
               "# scenario=test\nseed,sweep_param,sweep_value,scheme,best_ssr\n"
               "1,p_max_dbm,10,ddpg_fd,4\n2,p_max_dbm,10,ddpg_fd,6\n1,p_max_dbm,20,ddpg_fd,3\n");
    write_file(dir / "reward_x.csv",
               "# scenario=test\nseed,step,instant_reward,average_reward\n1,0,1,1\n1,1,2,1.5\n1,2,2,1.7\n");
    const Summary s = summarize({dir / "sweep.csv", dir / "reward_x.csv"});
    REQUIRE(s.sweeps.size() == 2);
    const auto &ten = s.sweeps[0].sweep_value == 10 ? s.sweeps[0] : s.sweeps[1];
    const auto &twenty = s.sweeps[0].sweep_value == 20 ? s.sweeps[0] : s.sweeps[1];
    CHECK(ten.count == 2);
    CHECK(ten.mean == 5.0);
    CHECK(ten.stddev == doctest::Approx(std::sqrt(2.0)));
    CHECK(twenty.count == 1);
    CHECK(twenty.stddev == 0.0);
    REQUIRE(s.convergence.size() == 1);
    CHECK(s.convergence[0].steps == 3);
    CHECK(s.convergence[0].convergence_step <= 3);
    const auto files = write_summary(s, dir);
    CHECK(files.size() == 2);
    for (const auto &f : files) CHECK(fs::exists(f));

    write_file(dir / "broken.csv",
               "# scenario=test\nseed,sweep_param,sweep_value,scheme,best_ssr\n1,p_max_dbm,10\n");
    CHECK_THROWS_WITH(summarize({dir / "broken.csv"}), doctest::Contains("malformed row"));
  }
}
