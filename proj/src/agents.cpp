#include "rissec/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rissec {

double NoiseSchedule::sigma(long long t) const {
  return std::max(floor, sigma0 * std::pow(decay, static_cast<double>(t)));
}

void AgentConfig::validate() const {
  require(gamma >= 0.0 && gamma <= 1.0, "agent: gamma must lie in [0, 1]");
  require(lr_actor > 0.0 && lr_critic > 0.0, "agent: learning rates must be > 0");
  require(tau_actor >= 0.0 && tau_actor <= 1.0 && tau_critic >= 0.0 && tau_critic <= 1.0,
          "agent: soft-update rates must lie in [0, 1]");
  require(batch >= 1 && capacity >= 1 && batch <= capacity, "agent: need 1 <= H <= D");
  require(steps >= 1 && episodes >= 1, "agent: T and episode count must be >= 1");
  require(noise.sigma0 >= 0.0 && noise.decay > 0.0 && noise.decay <= 1.0 && noise.floor >= 0.0,
          "agent: invalid exploration schedule");
  require(policy_delay >= 1, "agent: policy delay must be >= 1");
  require(hidden >= 1, "agent: hidden width must be >= 1");
}

nn::Architecture critic_architecture(int state_dim, int action_dim, int hidden) {
  using nn::Activation;
  return {{state_dim + action_dim, hidden, hidden, 1}, {Activation::relu, Activation::relu, Activation::linear}};
}

nn::Architecture actor_architecture(int state_dim, int action_dim, int hidden) {
  using nn::Activation;
  return {{state_dim, hidden, hidden, hidden, action_dim},
          {Activation::relu, Activation::relu, Activation::relu, Activation::tanh}};
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, "replay: capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
  data_.clear();
  cursor_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng &rng) const {
  require(!data_.empty(), "replay: cannot sample an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(count);
  for (auto &i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(const std::vector<std::size_t> &indices) const {
  require(!indices.empty(), "replay: empty batch");
  const auto &first = data_.at(indices.front());
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.states.resize(first.state.size(), n);
  b.actions.resize(first.action.size(), n);
  b.rewards.resize(1, n);
  b.next_states.resize(first.next_state.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto &t = data_.at(indices[static_cast<std::size_t>(j)]);
    b.states.col(j) = t.state;
    b.actions.col(j) = t.action;
    b.rewards(0, j) = t.reward;
    b.next_states.col(j) = t.next_state;
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t count, Rng &rng) const { return gather(sample_indices(count, rng)); }

// ---------------------------------------------------------------------------

ActionNormalizer::ActionNormalizer(const Sizes &sizes, double p_max, bool phases)
    : w_entries_(2 * sizes.Nt * sizes.K), phase_pairs_(phases ? sizes.M : 0), p_max_(p_max) {
  require(p_max > 0.0, "normalizer: p_max must be > 0");
}

NetMatrix ActionNormalizer::forward(const NetMatrix &raw) const {
  if (identity()) return raw;
  require(raw.rows() == w_entries_ + 2 * phase_pairs_, "normalizer: action has wrong dimension");
  NetMatrix out(raw.rows(), raw.cols());
  const auto root = static_cast<NetScalar>(std::sqrt(p_max_));
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto w = raw.col(j).head(w_entries_);
    const NetScalar norm = w.norm();
    // projected W divided by sqrt(p_max)
    out.col(j).head(w_entries_) = (norm * norm > p_max_) ? NetVector(w / norm) : NetVector(w / root);
    for (int m = 0; m < phase_pairs_; ++m) {
      const auto pair = raw.col(j).segment(w_entries_ + 2 * m, 2);
      const NetScalar r = pair.norm();
      if (r > 0) {
        out.col(j).segment(w_entries_ + 2 * m, 2) = pair / r;
      } else {
        out(w_entries_ + 2 * m, j) = 1;
        out(w_entries_ + 2 * m + 1, j) = 0;
      }
    }
  }
  return out;
}

NetMatrix ActionNormalizer::backward(const NetMatrix &raw, const NetMatrix &grad) const {
  if (identity()) return grad;
  NetMatrix out(raw.rows(), raw.cols());
  const auto root = static_cast<NetScalar>(std::sqrt(p_max_));
  // d(x/|x|) = (I - u u^T) / |x|
  auto radial_free = [](const auto &x, const auto &g, NetScalar norm) {
    const NetVector u = x / norm;
    return NetVector((g - u * u.dot(g)) / norm);
  };
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const NetVector w = raw.col(j).head(w_entries_);
    const NetVector gw = grad.col(j).head(w_entries_);
    const NetScalar norm = w.norm();
    out.col(j).head(w_entries_) = (norm * norm > p_max_) ? radial_free(w, gw, norm) : NetVector(gw / root);
    for (int m = 0; m < phase_pairs_; ++m) {
      const NetVector pair = raw.col(j).segment(w_entries_ + 2 * m, 2);
      const NetVector gp = grad.col(j).segment(w_entries_ + 2 * m, 2);
      const NetScalar r = pair.norm();
      out.col(j).segment(w_entries_ + 2 * m, 2) = r > 0 ? radial_free(pair, gp, r) : NetVector(NetVector::Zero(2));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Agent::Agent(int state_dim, int action_dim, AgentConfig config, Rng &rng, ActionNormalizer normalizer)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      config_(std::move(config)),
      normalizer_(std::move(normalizer)),
      whitener_(state_dim) {
  require(state_dim >= 1 && action_dim >= 1, "agent: dimensions must be >= 1");
  config_.validate();
  init_networks(rng);
}

Agent Agent::for_env(const Environment &env, AgentConfig config, Rng &rng) {
  const auto &c = env.config();
  return Agent(env.state_dim(), env.action_dim(), std::move(config), rng,
               ActionNormalizer(c.sizes, c.physical.p_max, c.optimize_phases));
}

void Agent::init_networks(Rng &rng) {
  actor_ = nn::init_uniform<NetScalar>(rng, actor_architecture(state_dim_, action_dim_, config_.hidden));
  critic_ = nn::init_uniform<NetScalar>(rng, critic_architecture(state_dim_, action_dim_, config_.hidden));
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = nn::AdamState<NetScalar>::for_network(actor_);
  critic_opt_ = nn::AdamState<NetScalar>::for_network(critic_);
  if (config_.algorithm == Algorithm::td3) {
    critic2_ = nn::init_uniform<NetScalar>(rng, critic_architecture(state_dim_, action_dim_, config_.hidden));
    target_critic2_ = critic2_;
    critic2_opt_ = nn::AdamState<NetScalar>::for_network(critic2_);
  }
  critic_updates_ = 0;
  actor_updates_ = 0;
}

RVec Agent::act(const RVec &state, bool explore, Rng &rng) const {
  require(state.size() == state_dim_, "act: state has wrong dimension");
  RVec a = actor_.forward_one(state.cast<NetScalar>()).cast<double>();
  if (explore) {
    std::normal_distribution<double> n(0.0, 1.0);
    const double s = sigma();
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = std::clamp(a(i) + s * n(rng), -1.0, 1.0);
  }
  return a;
}

namespace {

NetMatrix stack(const NetMatrix &top, const NetMatrix &bottom) {
  NetMatrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

double Agent::critic_step(Net &critic, nn::AdamState<NetScalar> &opt, const NetMatrix &sa, const NetMatrix &y) {
  Net::Cache cache;
  const NetMatrix q = critic.forward(sa, &cache);
  const NetMatrix diff = q - y;
  const auto n = static_cast<NetScalar>(sa.cols());
  const auto grads = critic.backward(cache, diff * (NetScalar(2) / n));
  nn::adam_step(critic, grads, opt, config_.lr_critic);
  return static_cast<double>(diff.squaredNorm() / n);
}

double Agent::actor_step(const Net &critic, const Batch &batch) {
  Net::Cache actor_cache, critic_cache;
  const NetMatrix raw = actor_.forward(batch.states, &actor_cache);
  const NetMatrix q = critic.forward(stack(batch.states, normalizer_.forward(raw)), &critic_cache);
  const auto n = static_cast<NetScalar>(batch.states.cols());
  // ascend mean Q: the loss is -mean(Q)
  NetMatrix input_grad;
  critic.backward(critic_cache, NetMatrix::Constant(1, q.cols(), NetScalar(-1) / n), &input_grad);
  const NetMatrix action_grad = normalizer_.backward(raw, input_grad.bottomRows(action_dim_));
  const auto grads = actor_.backward(actor_cache, action_grad);
  nn::adam_step(actor_, grads, actor_opt_, config_.lr_actor);
  ++actor_updates_;
  return static_cast<double>(q.mean());
}

NetMatrix Agent::ddpg_target(const Batch &batch) const {
  const NetMatrix next_actions = normalizer_.forward(target_actor_.forward(batch.next_states));
  const NetMatrix q_next = target_critic_.forward(stack(batch.next_states, next_actions));
  return batch.rewards + static_cast<NetScalar>(config_.gamma) * q_next;
}

TrainStats Agent::ddpg_update(const Batch &batch) {
  const NetMatrix y = ddpg_target(batch);

  TrainStats s;
  s.critic_loss = critic_step(critic_, critic_opt_, stack(batch.states, normalizer_.forward(batch.actions)), y);
  ++critic_updates_;
  s.actor_objective = actor_step(critic_, batch);
  s.actor_updated = true;
  nn::soft_update(target_actor_, actor_, config_.tau_actor);
  nn::soft_update(target_critic_, critic_, config_.tau_critic);
  return s;
}

Agent::Td3Target Agent::td3_target(const Batch &batch, Rng &rng) const {
  Td3Target t;
  NetMatrix next_actions = target_actor_.forward(batch.next_states);
  t.smoothing.resize(next_actions.rows(), next_actions.cols());
  std::normal_distribution<double> n(0.0, config_.target_noise);
  const double clip = config_.target_noise_clip;
  for (Eigen::Index i = 0; i < t.smoothing.size(); ++i)
    t.smoothing.data()[i] = static_cast<NetScalar>(std::clamp(n(rng), -clip, clip));
  next_actions = (next_actions + t.smoothing).cwiseMax(NetScalar(-1)).cwiseMin(NetScalar(1));
  const NetMatrix sa = stack(batch.next_states, normalizer_.forward(next_actions));
  t.q1 = target_critic_.forward(sa);
  t.q2 = target_critic2_.forward(sa);
  t.y = batch.rewards + static_cast<NetScalar>(config_.gamma) * t.q1.cwiseMin(t.q2);
  return t;
}

TrainStats Agent::td3_update(const Batch &batch, Rng &rng) {
  const Td3Target target = td3_target(batch, rng);
  const NetMatrix sa = stack(batch.states, normalizer_.forward(batch.actions));
  TrainStats s;
  s.critic_loss = critic_step(critic_, critic_opt_, sa, target.y);
  critic_step(critic2_, critic2_opt_, sa, target.y);
  ++critic_updates_;
  if (critic_updates_ % config_.policy_delay == 0) {
    s.actor_objective = actor_step(critic_, batch);
    s.actor_updated = true;
    nn::soft_update(target_actor_, actor_, config_.tau_actor);
    nn::soft_update(target_critic_, critic_, config_.tau_critic);
    nn::soft_update(target_critic2_, critic2_, config_.tau_critic);
  }
  return s;
}

TrainStats Agent::train_on(const Batch &batch, Rng &rng) {
  return config_.algorithm == Algorithm::td3 ? td3_update(batch, rng) : ddpg_update(batch);
}

std::optional<TrainStats> Agent::train_step(const ReplayBuffer &buffer, Rng &rng) {
  const auto h = static_cast<std::size_t>(config_.batch);
  if (buffer.size() < h) return std::nullopt;
  return train_on(buffer.sample(h, rng), rng);
}

// ---------------------------------------------------------------------------

std::vector<double> average_reward(const std::vector<double> &instant, double smoothing) {
  require(smoothing >= 0.0 && smoothing <= 1.0, "average_reward: smoothing must lie in [0, 1]");
  std::vector<double> out;
  out.reserve(instant.size());
  for (double r : instant) out.push_back(out.empty() ? r : smoothing * out.back() + (1.0 - smoothing) * r);
  return out;
}

namespace {

void record(EpisodeLog &log, const StepResult &r, long long step, bool phases) {
  log.instant.push_back(r.reward);
  if (log.best_step < 0 || r.reward > log.best_reward) {
    log.best_reward = r.reward;
    log.best_step = step;
    log.best_action = r.applied;
  }
  log.best_so_far.push_back(log.best_reward);
  if (phases) log.phases.push_back(r.applied.theta_phases);
}

RVec reset_env(Environment &env, Rng &env_rng, const RunOptions &options) {
  return options.channels ? env.reset_with(*options.channels, env_rng, options.initial_action)
                          : env.reset(env_rng, options.initial_action);
}

}  // namespace

EpisodeLog run_episode(Agent &agent, Environment &env, ReplayBuffer &buffer, Rng &env_rng, Rng &agent_rng,
                       const RunOptions &options) {
  require(agent.state_dim() == env.state_dim() && agent.action_dim() == env.action_dim(),
          "run_episode: agent and environment dimensions differ");
  const int T = agent.config().steps;
  EpisodeLog log;
  log.instant.reserve(T);
  log.critic_loss.reserve(T);

  agent.reset_noise();
  RVec state = agent.whitener()(reset_env(env, env_rng, options));
  for (int t = 0; t < T; ++t) {
    const RVec action = agent.act(state, true, agent_rng);
    StepResult r = env.step(action, env_rng);
    RVec next = agent.whitener()(r.next_state);
    buffer.push({state.cast<NetScalar>(), action.cast<NetScalar>(), static_cast<NetScalar>(r.reward),
                 next.cast<NetScalar>()});
    const auto stats = agent.train_step(buffer, agent_rng);
    log.critic_loss.push_back(stats ? stats->critic_loss : std::numeric_limits<double>::quiet_NaN());
    record(log, r, t, options.record_phases);
    state = std::move(next);
    agent.advance_noise();
  }
  log.average = average_reward(log.instant, options.smoothing);
  return log;
}

EpisodeLog run_training(Agent &agent, Environment &env, Rng &env_rng, Rng &agent_rng, const RunOptions &options) {
  ReplayBuffer buffer(static_cast<std::size_t>(agent.config().capacity));
  EpisodeLog all;
  for (int e = 0; e < agent.config().episodes; ++e) {
    if (e > 0) {
      if (agent.config().clear_buffer_each_episode) buffer.clear();
      if (agent.config().reinit_networks_each_episode) agent.init_networks(agent_rng);
    }
    EpisodeLog log = run_episode(agent, env, buffer, env_rng, agent_rng, options);
    const auto offset = static_cast<long long>(all.instant.size());
    if (all.best_step < 0 || log.best_reward > all.best_reward) {
      all.best_reward = log.best_reward;
      all.best_step = log.best_step + offset;
      all.best_action = log.best_action;
    }
    all.instant.insert(all.instant.end(), log.instant.begin(), log.instant.end());
    all.critic_loss.insert(all.critic_loss.end(), log.critic_loss.begin(), log.critic_loss.end());
    all.phases.insert(all.phases.end(), log.phases.begin(), log.phases.end());
  }
  all.average = average_reward(all.instant, options.smoothing);
  double best = -std::numeric_limits<double>::infinity();
  for (double r : all.instant) all.best_so_far.push_back(best = std::max(best, r));
  return all;
}

EpisodeLog run_random_search(Environment &env, int steps, Rng &env_rng, Rng &search_rng, const RunOptions &options) {
  require(steps >= 1, "random search: steps must be >= 1");
  EpisodeLog log;
  reset_env(env, env_rng, options);
  for (int t = 0; t < steps; ++t) {
    const RVec flat = encode_action(env.random_action(search_rng)).head(env.action_dim());
    record(log, env.step(flat, env_rng), t, options.record_phases);
  }
  log.average = average_reward(log.instant, options.smoothing);
  return log;
}

EnvConfig fixed_phase_config(EnvConfig config) {
  config.optimize_phases = false;
  return config;
}

EnvConfig half_duplex_config(EnvConfig config) {
  std::fill(config.physical.user_power.begin(), config.physical.user_power.end(), 0.0);
  return config;
}

}  // namespace rissec
