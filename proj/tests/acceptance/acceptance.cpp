// Runs every primary acceptance criterion at its stated tolerance and prints one PASS/FAIL
// line per criterion. Exit status is nonzero when any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "gradcheck.hpp"
#include "mc_oracle.hpp"
#include "rissec/experiment.hpp"

using namespace rissec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path out;
  int threads = 0;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double window_mean(const std::vector<double> &v, std::size_t begin, std::size_t end) {
  return std::accumulate(v.begin() + begin, v.begin() + end, 0.0) / static_cast<double>(end - begin);
}

ScenarioResult run(const Context &ctx, const std::string &scenario, const std::string &dir,
                   const std::vector<std::string> &assignments, std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5}) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.settings = scenario_defaults(scenario);
  for (const auto &a : assignments) apply_assignment(spec.settings, a);
  spec.seeds = std::move(seeds);
  spec.out_dir = ctx.out / dir;
  spec.threads = ctx.threads;
  fs::remove_all(spec.out_dir);
  return run_scenario(spec);
}

// Seed-mean best SSR keyed by (sweep value, scheme).
std::map<std::pair<double, std::string>, double> seed_means(const ScenarioResult &r) {
  std::map<std::pair<double, std::string>, std::vector<double>> acc;
  for (const auto &run : r.runs) acc[{run.sweep_value, run.scheme}].push_back(run.log.best_reward);
  std::map<std::pair<double, std::string>, double> out;
  for (const auto &[k, v] : acc) out[k] = mean(v);
  return out;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome sinr_oracle(const Context &) {
  Rng rng = make_rng(2024);
  std::uniform_int_distribution<int> small(1, 2), ris(2, 8), ant(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Sizes s{ris(rng), ant(rng), ant(rng), small(rng), small(rng)};
    const auto in = oracle::random_input(rng, s, 20.0);
    const auto est = oracle::simulate(in, 1000000, rng);
    const LinkBudget b = evaluate(in.channels, Action{in.W, in.theta_phases}, in.physical);
    auto grade = [&](double closed, double mc) { worst = std::max(worst, std::abs(closed - mc) / std::abs(closed)); };
    for (int k = 0; k < s.K; ++k) {
      grade(b.sinr_B(k), est.sinr_B(k));
      grade(b.sinr_S(k), est.sinr_S(k));
      for (int l = 0; l < s.L; ++l) {
        grade(b.sinr_Ed(k, l), est.sinr_Ed(k, l));
        grade(b.sinr_Eu(k, l), est.sinr_Eu(k, l));
      }
    }
  }
  return {worst <= 0.02, "worst relative gap " + fmt(worst) + " (limit 0.02) over 5 random systems, 1e6 draws"};
}

Outcome gradients(const Context &) {
  Rng rng = make_rng(7);
  oracle::GradReport total;
  auto check = [&](const nn::Architecture &a) {
    const auto net = nn::init_uniform<double>(rng, a);
    const auto X = oracle::gaussian_matrix(rng, a.inputs(), 2);
    const auto U = oracle::gaussian_matrix(rng, a.outputs(), 2);
    const auto r = oracle::check_gradients(net, X, U, rng);
    total.checked += r.checked;
    total.failed += r.failed;
    total.graded += r.graded;
    total.worst = std::max(total.worst, r.worst);
    total.max_abs = std::max(total.max_abs, r.max_abs);
  };
  check(critic_architecture(92, 32));
  check(actor_architecture(92, 32));
  return {total.failed == 0, std::to_string(total.checked) + " partials, " + std::to_string(total.failed) +
                                 " above 1e-4 relative, worst relative " + fmt(total.worst) + " over " +
                                 std::to_string(total.graded) + " graded, largest absolute gap " + fmt(total.max_abs)};
}

Outcome constraints(const Context &) {
  const Sizes s;
  const double p_max = 0.1;
  Rng rng = make_rng(3);
  double worst_power = 0.0, worst_modulus = 0.0;
  for (int i = 0; i < 10000; ++i) {
    // wider than the actor's range so the projection is exercised
    RVec flat(action_dimension(s));
    for (auto &v : flat) v = uniform(rng, -3.0, 3.0);
    const Action a = decode_action(flat, s, p_max);
    worst_power = std::max(worst_power, a.W.squaredNorm() / p_max);
    const CMat theta = build_theta(a.theta_phases);
    for (int m = 0; m < s.M; ++m) worst_modulus = std::max(worst_modulus, std::abs(std::abs(theta(m, m)) - 1.0));
  }
  const bool pass = worst_power <= 1.0 + 1e-12 && worst_modulus <= 1e-9;
  return {pass, "max Tr(WW^H)/P_max " + fmt(worst_power) + ", max ||theta|-1| " + fmt(worst_modulus)};
}

Outcome convergence(const Context &ctx) {
  const auto r = run(ctx, "convergence", "convergence", {});
  int ratio_ok = 0, crossing_ok = 0;
  std::string detail;
  for (const auto &run : r.runs) {
    const auto &x = run.log.instant;
    const double ratio = window_mean(x, 19000, 20000) / window_mean(x, 0, 500);
    const long long cross = convergence_step(x, 500, 0.95);
    ratio_ok += ratio >= 1.5;
    crossing_ok += cross < 12000;
    detail += " s" + std::to_string(run.seed) + ":" + fmt(ratio) + "x@" + std::to_string(cross);
  }
  return {ratio_ok >= 4 && crossing_ok >= 3, std::to_string(ratio_ok) + "/5 seeds >= 1.5x, " +
                                                 std::to_string(crossing_ok) + "/5 cross before 12000;" + detail};
}

ScenarioResult &power_sweep(const Context &ctx) {
  static std::optional<ScenarioResult> cached;
  if (!cached)
    cached = run(ctx, "ssr_vs_pmax", "ssr_vs_pmax", {"sweep.values=10,20,30", "sweep.schemes=ddpg_fd,fixed_phase_fd"});
  return *cached;
}

Outcome baseline_ordering(const Context &ctx) {
  const auto m = seed_means(power_sweep(ctx));
  const double fd = m.at({20.0, "ddpg_fd"}), fixed = m.at({20.0, "fixed_phase_fd"});
  return {fd > fixed, "20 dBm: ddpg_fd " + fmt(fd) + " vs fixed_phase_fd " + fmt(fixed)};
}

Outcome power_monotone(const Context &ctx) {
  const auto m = seed_means(power_sweep(ctx));
  const double a = m.at({10.0, "ddpg_fd"}), b = m.at({20.0, "ddpg_fd"}), c = m.at({30.0, "ddpg_fd"});
  return {a <= b && b <= c, "10/20/30 dBm: " + fmt(a) + " / " + fmt(b) + " / " + fmt(c)};
}

Outcome hwi_degradation(const Context &ctx) {
  const auto m = seed_means(run(ctx, "ssr_vs_kappa", "ssr_vs_kappa", {"sweep.schemes=ddpg_fd,ddpg_hd"}));
  const double a = m.at({0.01, "ddpg_fd"}), b = m.at({0.05, "ddpg_fd"}), c = m.at({0.1, "ddpg_fd"});
  const double hd = m.at({0.01, "ddpg_hd"});
  return {a >= b && b >= c && a > hd, "kappa 0.01/0.05/0.1: " + fmt(a) + " / " + fmt(b) + " / " + fmt(c) +
                                          "; half duplex at 0.01: " + fmt(hd)};
}

Outcome ris_size(const Context &ctx) {
  const auto m = seed_means(run(ctx, "ssr_vs_M", "ssr_vs_M", {"sweep.values=8,16"}));
  const double m8 = m.at({8.0, "ddpg_fd"}), m16 = m.at({16.0, "ddpg_fd"});
  return {m16 > m8, "M=8 " + fmt(m8) + " vs M=16 " + fmt(m16)};
}

Outcome init_robustness(const Context &ctx) {
  const auto r = run(ctx, "init_robustness", "init_robustness", {}, {1});
  std::vector<double> finals;
  for (const auto &run : r.runs) finals.push_back(run.log.average.back());
  const double mu = mean(finals);
  double worst = 0.0;
  std::string detail;
  for (double f : finals) {
    worst = std::max(worst, std::abs(f - mu) / mu);
    detail += " " + fmt(f);
  }
  return {worst <= 0.15, "largest deviation " + fmt(100 * worst) + "% of mean " + fmt(mu) + "; finals" + detail};
}

Outcome determinism(const Context &ctx) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"convergence", {"agent.steps=400", "agent.batch=32"}},
      {"ssr_vs_pmax", {"sweep.steps=300", "agent.batch=32", "sweep.values=10,30"}},
      {"cdf", {"sweep.steps=300", "agent.batch=32"}},
      {"init_robustness", {"sweep.steps=300", "agent.batch=32", "init.count=2"}}};
  int files = 0, mismatched = 0;
  for (const auto &[scenario, settings] : cases) {
    Context one = ctx, two = ctx;
    one.threads = 1;
    two.threads = 2;
    const auto a = run(one, scenario, "determinism/a_" + scenario, settings, {1, 2});
    const auto b = run(two, scenario, "determinism/b_" + scenario, settings, {1, 2});
    if (a.files.size() != b.files.size()) return {false, scenario + ": file lists differ"};
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      ++files;
      mismatched += slurp(a.files[i]) != slurp(b.files[i]) || a.files[i].filename() != b.files[i].filename();
    }
  }
  return {mismatched == 0 && files > 0,
          std::to_string(files) + " CSV pairs compared across reruns, " + std::to_string(mismatched) + " differ"};
}

}  // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Outcome(const Context &)>>> criteria{
      {"sinr_oracle", sinr_oracle},         {"gradients", gradients},
      {"constraints", constraints},         {"determinism", determinism},
      {"convergence", convergence},         {"baseline_ordering", baseline_ordering},
      {"power_monotonicity", power_monotone}, {"hwi_degradation", hwi_degradation},
      {"ris_size", ris_size},               {"init_robustness", init_robustness}};

  CLI::App app{"Acceptance criteria"};
  Context ctx;
  ctx.out = "acceptance_out";
  std::vector<std::string> only;
  app.add_option("-o,--out", ctx.out, "Directory for the scenario CSVs");
  app.add_option("-j,--threads", ctx.threads, "Worker threads (0: hardware concurrency)");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  int failed = 0, ran = 0;
  for (const auto &[name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception &e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(secs) << " s]" << std::endl;
    failed += !o.pass;
    ++ran;
  }
  std::cout << ran - failed << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
