#pragma once

#include <optional>
#include <vector>

#include "rissec/env.hpp"
#include "rissec/neural.hpp"

namespace rissec {

/// Network scalar. Training runs in single precision; gradient checks instantiate double.
using NetScalar = float;
using Net = nn::Mlp<NetScalar>;
using NetMatrix = Net::Matrix;
using NetVector = Net::Vector;

enum class Algorithm { ddpg, td3 };

struct NoiseSchedule {
  double sigma0 = 0.1;
  double decay = 0.9995;
  double floor = 0.001;

  /// max(floor, sigma0 * decay^t)
  double sigma(long long t) const;
};

struct AgentConfig {
  Algorithm algorithm = Algorithm::ddpg;
  double gamma = 0.9;
  double lr_actor = 0.0005;
  double lr_critic = 0.001;
  double tau_actor = 0.001;   // soft-update rate beta_mu
  double tau_critic = 0.001;  // soft-update rate beta_c
  int batch = 128;
  int capacity = 100000;
  int steps = 20000;          // T, per episode
  int episodes = 1;
  NoiseSchedule noise;
  bool clear_buffer_each_episode = true;
  bool reinit_networks_each_episode = true;
  int hidden = 128;
  // TD3
  int policy_delay = 2;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;

  void validate() const;
};

/// Critic D_s + D_a -> 128 -> 128 -> 1 (linear output).
nn::Architecture critic_architecture(int state_dim, int action_dim, int hidden = 128);
/// Actor D_s -> 128 -> 128 -> 128 -> D_a (tanh output).
nn::Architecture actor_architecture(int state_dim, int action_dim, int hidden = 128);

/// Differentiable form of the action decoding (power projection of W, unit modulus per RIS
/// pair), applied to the raw actor output before it reaches the critic. W is expressed in
/// units of sqrt(p_max) so the critic input stays O(1) for every power budget.
class ActionNormalizer {
 public:
  ActionNormalizer() = default;  // identity
  ActionNormalizer(const Sizes &sizes, double p_max, bool phases);

  bool identity() const { return w_entries_ == 0; }
  NetMatrix forward(const NetMatrix &raw) const;
  /// dL/draw from dL/dnormalized.
  NetMatrix backward(const NetMatrix &raw, const NetMatrix &grad) const;

 private:
  int w_entries_ = 0;
  int phase_pairs_ = 0;
  double p_max_ = 1.0;
};

struct Transition {
  NetVector state;
  NetVector action;
  NetScalar reward = 0;
  NetVector next_state;
};

struct Batch {
  NetMatrix states;       // D_s x H
  NetMatrix actions;      // D_a x H
  NetMatrix rewards;      // 1 x H
  NetMatrix next_states;  // D_s x H
};

/// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  void clear();
  const Transition &at(std::size_t i) const { return data_[i]; }

  /// Uniform sampling with replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng &rng) const;
  Batch sample(std::size_t count, Rng &rng) const;
  Batch gather(const std::vector<std::size_t> &indices) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

struct TrainStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean Q(s, pi(s)) over the batch
  bool actor_updated = false;
};

/// DDPG (or TD3) actor-critic with target networks.
class Agent {
 public:
  Agent(int state_dim, int action_dim, AgentConfig config, Rng &rng, ActionNormalizer normalizer = {});
  /// Agent shaped for `env`, with the normalizer matching its action decoding.
  static Agent for_env(const Environment &env, AgentConfig config, Rng &rng);

  void init_networks(Rng &rng);

  /// Deterministic actor output, plus clipped Gaussian exploration when requested.
  RVec act(const RVec &state, bool explore, Rng &rng) const;

  /// One DDPG/TD3 update from the buffer; nullopt while the buffer holds fewer than H transitions.
  std::optional<TrainStats> train_step(const ReplayBuffer &buffer, Rng &rng);
  /// Update from an explicit batch.
  TrainStats train_on(const Batch &batch, Rng &rng);

  void advance_noise() { ++noise_step_; }
  void reset_noise() { noise_step_ = 0; }
  double sigma() const { return config_.noise.sigma(noise_step_); }

  const AgentConfig &config() const { return config_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  const Net &actor() const { return actor_; }
  const Net &target_actor() const { return target_actor_; }
  const Net &critic() const { return critic_; }
  const Net &target_critic() const { return target_critic_; }
  const Net &critic2() const { return critic2_; }
  const Net &target_critic2() const { return target_critic2_; }
  Net &actor() { return actor_; }
  Net &critic() { return critic_; }

  const ActionNormalizer &normalizer() const { return normalizer_; }

  /// Online state standardisation shared by every network input.
  Whitener &whitener() { return whitener_; }

  long long critic_updates() const { return critic_updates_; }
  long long actor_updates() const { return actor_updates_; }

  /// DDPG Bellman target y = r + gamma Q_t(s', pi_t(s')).
  NetMatrix ddpg_target(const Batch &batch) const;

  /// TD3 target with twin-critic minimum; exposed for inspection.
  struct Td3Target {
    NetMatrix q1, q2, y;
    NetMatrix smoothing;  // noise added to the target actions
  };
  Td3Target td3_target(const Batch &batch, Rng &rng) const;

 private:
  TrainStats ddpg_update(const Batch &batch);
  TrainStats td3_update(const Batch &batch, Rng &rng);
  double critic_step(Net &critic, nn::AdamState<NetScalar> &opt, const NetMatrix &sa, const NetMatrix &y);
  double actor_step(const Net &critic, const Batch &batch);

  int state_dim_;
  int action_dim_;
  AgentConfig config_;
  ActionNormalizer normalizer_;
  Net actor_, target_actor_, critic_, target_critic_, critic2_, target_critic2_;
  nn::AdamState<NetScalar> actor_opt_, critic_opt_, critic2_opt_;
  Whitener whitener_;
  long long noise_step_ = 0;
  long long critic_updates_ = 0;
  long long actor_updates_ = 0;
};

/// r_avg[t+1] = w r_avg[t] + (1 - w) r[t+1], seeded with r_avg[0] = r[0].
std::vector<double> average_reward(const std::vector<double> &instant, double smoothing);

struct EpisodeLog {
  std::vector<double> instant;
  std::vector<double> average;
  std::vector<double> best_so_far;
  std::vector<double> critic_loss;  // NaN where no update happened
  double best_reward = 0.0;
  long long best_step = -1;
  Action best_action;
  std::vector<RVec> phases;  // applied RIS phases per step, when recorded
};

struct RunOptions {
  double smoothing = 0.995;
  bool record_phases = false;
  std::optional<Action> initial_action;
  /// Replay this realization instead of drawing channels at reset.
  std::optional<ChannelSet> channels;
};

/// Algorithm 1: reset, then T steps of act / reward / store / update / soft-update / decay.
/// `env_rng` drives channels and phase noise; `agent_rng` drives exploration, sampling and init.
EpisodeLog run_episode(Agent &agent, Environment &env, ReplayBuffer &buffer, Rng &env_rng, Rng &agent_rng,
                       const RunOptions &options = {});

/// Every episode of the configured schedule, logs concatenated.
EpisodeLog run_training(Agent &agent, Environment &env, Rng &env_rng, Rng &agent_rng,
                        const RunOptions &options = {});

/// Uniformly random feasible actions for T steps; the best is kept.
EpisodeLog run_random_search(Environment &env, int steps, Rng &env_rng, Rng &search_rng,
                             const RunOptions &options = {});

/// RIS phases frozen at zero; W learned by DDPG (action dimension 2 Nt K).
EnvConfig fixed_phase_config(EnvConfig config);
/// Half duplex: every user transmit power set to zero.
EnvConfig half_duplex_config(EnvConfig config);

}  // namespace rissec
