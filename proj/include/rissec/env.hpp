#pragma once

#include <optional>
#include <vector>

#include "rissec/channel.hpp"
#include "rissec/random.hpp"
#include "rissec/system_model.hpp"

namespace rissec {

struct EnvConfig {
  Sizes sizes;
  PhysicalConfig physical;
  ChannelParams channel;
  Geometry geometry;
  bool phase_noise_per_step = true;   // redraw Phi every step; otherwise once per episode
  bool optimize_phases = true;        // false: RIS frozen at zero phases, action is W only

  int state_dim() const;
  int action_dim() const;
  void validate() const;
};

/// D_s = 4 + 2K^2 + 4LK + 2 Nr K + 4K + 3M + 2 Nt K.
int state_dimension(const Sizes &s);
/// D_a = 2M + 2 Nt K.
int action_dimension(const Sizes &s);

/// Flat layout: (re, im) of W column by column, then (re, im) per RIS element.
RVec encode_action(const Action &action);

/// Inverse of encode_action followed by the power projection. Accepts a W-only vector of
/// length 2 Nt K, in which case the RIS phases are all zero.
Action decode_action(const RVec &flat, const Sizes &sizes, double p_max);

/// Inputs for one observation.
struct StateParts {
  const LinkBudget *budget = nullptr;   // rates of the last applied action
  const ChannelSet *channels = nullptr;
  const RVec *phase_noise = nullptr;    // Phi for the upcoming slot
  const Action *previous = nullptr;     // most recently applied action
  const Cascade *applied = nullptr;     // cascade the last reward was computed with
};

RVec build_state(const StateParts &parts);

/// Online per-coordinate standardisation (Welford running mean and variance).
class Whitener {
 public:
  explicit Whitener(int dim = 0);
  /// Update the statistics with x, then return (x - mean) / max(std, floor).
  RVec operator()(const RVec &x);
  RVec apply(const RVec &x) const;
  void observe(const RVec &x);
  long long count() const { return count_; }
  const RVec &mean() const { return mean_; }
  RVec stddev() const;

  static constexpr double kFloor = 1e-8;

 private:
  long long count_ = 0;
  RVec mean_;
  RVec m2_;
};

struct StepResult {
  RVec next_state;
  double reward = 0.0;
  LinkBudget info;
  Action applied;
};

/// The MDP: one ChannelSet per episode, SSR reward.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  const EnvConfig &config() const { return config_; }
  int state_dim() const { return config_.state_dim(); }
  int action_dim() const { return config_.action_dim(); }

  /// Fresh channels; initial action is the scaled identity precoder with zero phases unless given.
  RVec reset(Rng &rng, const std::optional<Action> &initial = std::nullopt);
  /// Reset onto fixed channels instead of drawing new ones (replaying a dumped realization).
  RVec reset_with(const ChannelSet &channels, Rng &rng, const std::optional<Action> &initial = std::nullopt);

  StepResult step(const RVec &flat_action, Rng &rng);

  bool ready() const { return ready_; }
  const ChannelSet &channels() const { return channels_; }
  const Action &last_action() const { return last_action_; }
  const LinkBudget &last_budget() const { return last_budget_; }

  /// First K columns of the identity, scaled onto the power budget, with zero RIS phases.
  Action identity_action() const;
  /// Uniformly random feasible action: Gaussian W projected, phases uniform on [0, 2pi).
  Action random_action(Rng &rng) const;

 private:
  RVec observe(const Cascade &applied);

  EnvConfig config_;
  ChannelSet channels_;
  Action last_action_;
  LinkBudget last_budget_;
  bool ready_ = false;
};

}  // namespace rissec
