#include "rissec/env.hpp"

#include <algorithm>

namespace rissec {

int state_dimension(const Sizes &s) {
  return 4 + 2 * s.K * s.K + 4 * s.L * s.K + 2 * s.Nr * s.K + 4 * s.K + 3 * s.M + 2 * s.Nt * s.K;
}

int action_dimension(const Sizes &s) { return 2 * s.M + 2 * s.Nt * s.K; }

int EnvConfig::state_dim() const { return state_dimension(sizes); }

int EnvConfig::action_dim() const {
  return optimize_phases ? action_dimension(sizes) : 2 * sizes.Nt * sizes.K;
}

void EnvConfig::validate() const {
  sizes.validate();
  physical.validate();
  channel.validate();
  geometry.validate();
  require(physical.users() == sizes.K, "env: one user power per user required");
  require(static_cast<int>(geometry.users.size()) == sizes.K, "env: geometry has wrong number of users");
  require(static_cast<int>(geometry.eves.size()) == sizes.L, "env: geometry has wrong number of eavesdroppers");
}

RVec encode_action(const Action &action) {
  const auto nw = action.W.size();
  const auto M = action.theta_phases.size();
  RVec flat(2 * nw + 2 * M);
  Eigen::Index i = 0;
  for (Eigen::Index k = 0; k < action.W.cols(); ++k)
    for (Eigen::Index n = 0; n < action.W.rows(); ++n) {
      flat(i++) = action.W(n, k).real();
      flat(i++) = action.W(n, k).imag();
    }
  for (Eigen::Index m = 0; m < M; ++m) {
    flat(i++) = std::cos(action.theta_phases(m));
    flat(i++) = std::sin(action.theta_phases(m));
  }
  return flat;
}

Action decode_action(const RVec &flat, const Sizes &sizes, double p_max) {
  const int nw = sizes.Nt * sizes.K;
  const bool with_phases = flat.size() == 2 * nw + 2 * sizes.M;
  require(with_phases || flat.size() == 2 * nw,
          "decode_action: expected " + std::to_string(2 * nw + 2 * sizes.M) + " (or " + std::to_string(2 * nw) +
              ") entries, got " + std::to_string(flat.size()));
  Action a;
  CMat W(sizes.Nt, sizes.K);
  Eigen::Index i = 0;
  for (int k = 0; k < sizes.K; ++k)
    for (int n = 0; n < sizes.Nt; ++n, i += 2) W(n, k) = {flat(i), flat(i + 1)};
  a.W = project_precoder(W, p_max);
  a.theta_phases = RVec::Zero(sizes.M);
  if (with_phases) {
    for (int m = 0; m < sizes.M; ++m, i += 2) {
      const double re = flat(i);
      const double im = flat(i + 1);
      a.theta_phases(m) = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
    }
  }
  return a;
}

namespace {

void push_complex(RVec &out, Eigen::Index &i, const CMat &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out(i++) = m(r, c).real();
      out(i++) = m(r, c).imag();
    }
}

}  // namespace

RVec build_state(const StateParts &p) {
  require(p.budget && p.channels && p.phase_noise && p.previous && p.applied, "build_state: missing part");
  const Sizes s = p.channels->sizes();
  RVec state(state_dimension(s));
  Eigen::Index i = 0;

  state(i++) = p.budget->sum_rate_B();
  state(i++) = p.budget->sum_rate_S();
  state(i++) = p.budget->sum_max_rate_E();
  state(i++) = p.budget->ssr;

  // cascaded channels for the upcoming slot under the most recent action
  const Cascade now = cascade(*p.channels, p.previous->theta_phases, *p.phase_noise);
  const CMat &W = p.previous->W;
  push_complex(state, i, now.B * W);   // G_1d, K x K
  push_complex(state, i, now.E * W);   // G_2d, L x K
  push_complex(state, i, now.A);       // G_1u, Nr x K
  push_complex(state, i, now.U);       // G_2u, L x K

  for (Eigen::Index m = 0; m < s.M; ++m) state(i++) = (*p.phase_noise)(m);

  // previous action always carries the phase pairs, even when they are frozen
  const RVec prev = encode_action(*p.previous);
  state.segment(i, prev.size()) = prev;
  i += prev.size();

  for (int k = 0; k < s.K; ++k) {
    const cdouble wk = W.col(k).dot(W.col(k));
    state(i++) = wk.real() * wk.real();
    state(i++) = wk.imag() * wk.imag();
  }
  const CMat g1d = p.applied->B * W;
  for (int k = 0; k < s.K; ++k) {
    state(i++) = g1d(k, k).real() * g1d(k, k).real();
    state(i++) = g1d(k, k).imag() * g1d(k, k).imag();
  }
  return state;
}

Whitener::Whitener(int dim) : mean_(RVec::Zero(dim)), m2_(RVec::Zero(dim)) {}

void Whitener::observe(const RVec &x) {
  if (count_ == 0 && mean_.size() != x.size()) {
    mean_ = RVec::Zero(x.size());
    m2_ = RVec::Zero(x.size());
  }
  require(x.size() == mean_.size(), "whiten: dimension changed");
  ++count_;
  const RVec delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
}

RVec Whitener::stddev() const {
  if (count_ == 0) return RVec::Zero(mean_.size());
  return (m2_ / static_cast<double>(count_)).cwiseSqrt();
}

RVec Whitener::apply(const RVec &x) const {
  require(x.size() == mean_.size(), "whiten: dimension mismatch");
  return (x - mean_).cwiseQuotient(stddev().cwiseMax(kFloor));
}

RVec Whitener::operator()(const RVec &x) {
  observe(x);
  return apply(x);
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

Action Environment::identity_action() const {
  const auto &s = config_.sizes;
  Action a;
  a.W = project_precoder(CMat::Identity(s.Nt, s.Nt).leftCols(std::min(s.K, s.Nt)), config_.physical.p_max);
  if (s.K > s.Nt) {
    CMat W = CMat::Zero(s.Nt, s.K);
    W.leftCols(s.Nt) = a.W;
    a.W = W;
  }
  a.theta_phases = RVec::Zero(s.M);
  return a;
}

Action Environment::random_action(Rng &rng) const {
  const auto &s = config_.sizes;
  Action a;
  a.W.resize(s.Nt, s.K);
  for (Eigen::Index i = 0; i < a.W.size(); ++i) a.W.data()[i] = complex_normal(rng);
  a.W *= std::sqrt(config_.physical.p_max) / a.W.norm();
  a.theta_phases = RVec::Zero(s.M);
  if (config_.optimize_phases)
    for (int m = 0; m < s.M; ++m) a.theta_phases(m) = uniform(rng, 0.0, 2.0 * kPi);
  return a;
}

RVec Environment::reset(Rng &rng, const std::optional<Action> &initial) {
  ChannelSet ch = sample_channel_set(rng, config_.geometry, config_.channel, config_.sizes);
  return reset_with(ch, rng, initial);
}

RVec Environment::reset_with(const ChannelSet &channels, Rng &rng, const std::optional<Action> &initial) {
  channels.validate(config_.sizes);
  channels_ = channels;
  last_action_ = initial ? *initial : identity_action();
  if (!config_.optimize_phases) last_action_.theta_phases.setZero();
  last_action_.W = project_precoder(last_action_.W, config_.physical.p_max);
  const Cascade applied = cascade(channels_, last_action_.theta_phases, channels_.phase_noise);
  last_budget_ = evaluate(applied, last_action_.W, config_.physical);
  ready_ = true;
  if (config_.phase_noise_per_step) channels_.phase_noise = sample_phase_noise(rng, config_.sizes.M);
  return observe(applied);
}

StepResult Environment::step(const RVec &flat_action, Rng &rng) {
  require(ready_, "env: step() called before reset()");
  require(flat_action.size() == action_dim(), "env: action has " + std::to_string(flat_action.size()) +
                                                  " entries, expected " + std::to_string(action_dim()));
  StepResult r;
  r.applied = decode_action(flat_action, config_.sizes, config_.physical.p_max);
  const Cascade applied = cascade(channels_, r.applied.theta_phases, channels_.phase_noise);
  r.info = evaluate(applied, r.applied.W, config_.physical);
  r.reward = r.info.ssr;
  last_action_ = r.applied;
  last_budget_ = r.info;
  if (config_.phase_noise_per_step) channels_.phase_noise = sample_phase_noise(rng, config_.sizes.M);
  r.next_state = observe(applied);
  return r;
}

RVec Environment::observe(const Cascade &applied) {
  StateParts parts;
  parts.budget = &last_budget_;
  parts.channels = &channels_;
  parts.phase_noise = &channels_.phase_noise;
  parts.previous = &last_action_;
  parts.applied = &applied;
  return build_state(parts);
}

}  // namespace rissec
