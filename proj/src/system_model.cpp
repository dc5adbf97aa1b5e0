#include "rissec/system_model.hpp"

#include <algorithm>

namespace rissec {

HwiConfig HwiConfig::uniform(int K, double kappa, double rho_s) {
  HwiConfig h;
  h.kappa_tx_bs = kappa;
  h.kappa_rx_bs = kappa;
  h.kappa_tx_user.assign(K, kappa);
  h.kappa_rx_user.assign(K, kappa);
  h.rho_s = rho_s;
  return h;
}

void HwiConfig::validate(int K) const {
  require(kappa_tx_bs >= 0.0 && kappa_rx_bs >= 0.0, "hwi: BS kappas must be >= 0");
  require(static_cast<int>(kappa_tx_user.size()) == K && static_cast<int>(kappa_rx_user.size()) == K,
          "hwi: one kappa per user required");
  for (double k : kappa_tx_user) require(k >= 0.0, "hwi: user kappas must be >= 0");
  for (double k : kappa_rx_user) require(k >= 0.0, "hwi: user kappas must be >= 0");
  require(rho_s >= 0.0 && rho_s <= 1.0, "hwi: rho_s must lie in [0, 1]");
}

NoiseConfig NoiseConfig::from_density(double density_dbm_hz, double bandwidth_hz) {
  const double thermal = dbm_to_watts(density_dbm_hz + 10.0 * std::log10(bandwidth_hz));
  NoiseConfig n;
  n.sigma2 = thermal;
  n.sigma_d2 = 1.1 * thermal;
  n.delta_u2 = 1.1 * thermal;
  n.mu_d2 = thermal;
  n.mu_u2 = thermal;
  return n;
}

void NoiseConfig::validate() const {
  require(sigma2 > 0.0 && sigma_d2 > 0.0 && delta_u2 > 0.0 && mu_d2 > 0.0 && mu_u2 > 0.0,
          "noise: every noise power must be > 0");
}

void PhysicalConfig::validate() const {
  require(p_max > 0.0, "physical: p_max must be > 0");
  require(!user_power.empty(), "physical: at least one user");
  for (double p : user_power) require(p >= 0.0, "physical: user powers must be >= 0");
  hwi.validate(users());
  noise.validate();
}

double LinkBudget::sum_max_rate_E() const {
  double total = 0.0;
  for (Eigen::Index k = 0; k < rate_E.rows(); ++k) total += rate_E.row(k).maxCoeff();
  return total;
}

CMat project_precoder(const CMat &W, double p_max) {
  require(p_max > 0.0, "project_precoder: p_max must be > 0");
  const double power = W.squaredNorm();
  if (power <= p_max) return W;
  return W * (std::sqrt(p_max) / std::sqrt(power));
}

CMat build_theta(const RVec &phases) {
  CMat theta = CMat::Zero(phases.size(), phases.size());
  for (Eigen::Index m = 0; m < phases.size(); ++m) theta(m, m) = std::polar(1.0, phases(m));
  return theta;
}

namespace {

CMat stack_columns(const std::vector<CVec> &vs) {
  CMat out(vs.front().size(), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = vs[i];
  return out;
}

}  // namespace

Cascade cascade(const ChannelSet &channels, const RVec &theta_phases, const RVec &phase_noise) {
  const auto M = channels.H_d.rows();
  require(theta_phases.size() == M && phase_noise.size() == M, "cascade: phase vectors must have M entries");
  CVec reflect(M);
  for (Eigen::Index m = 0; m < M; ++m) reflect(m) = std::polar(1.0, theta_phases(m) + phase_noise(m));
  const auto D = reflect.asDiagonal();

  const CMat hd = stack_columns(channels.h_d);
  const CMat hu = stack_columns(channels.h_u);
  const CMat gd = stack_columns(channels.g_d);
  const CMat gu = stack_columns(channels.g_u);

  Cascade c;
  c.B = hd.adjoint() * D * channels.H_d;
  c.E = gd.adjoint() * D * channels.H_d;
  c.A = channels.H_u.adjoint() * D * hu;
  c.C = hd.adjoint() * D * hu;
  c.U = gu.adjoint() * D * hu;
  return c;
}

CMat combiner(const Cascade &c) {
  CMat F(c.A.rows(), c.A.cols());
  for (Eigen::Index k = 0; k < c.A.cols(); ++k) {
    const double n = c.A.col(k).norm();
    if (n > 0.0) {
      F.col(k) = c.A.col(k) / n;
    } else {
      F.col(k).setZero();
      F(0, k) = 1.0;
    }
  }
  return F;
}

RVec antenna_power(const CMat &W) { return W.rowwise().squaredNorm(); }

namespace {

// kappa_d^S * x^H diag(sum_i w_i w_i^H) x for a 1 x Nt effective row x.
double tx_distortion(const Eigen::Ref<const CMat> &row, const RVec &per_antenna, double kappa) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < row.cols(); ++n) acc += abs2(row(0, n)) * per_antenna(n);
  return kappa * acc;
}

double desired_B(int k, const Cascade &c, const CMat &W) {
  return abs2(cdouble((c.B.row(k) * W.col(k))(0, 0)));
}

void check_user(int k, int K) { require(k >= 0 && k < K, "user index out of range"); }

}  // namespace

double gamma_B(int k, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  check_user(k, K);
  const auto &hwi = cfg.hwi;
  const CMat gains = c.B.row(k) * W;  // 1 x K
  double g = 0.0;
  for (int i = 0; i < K; ++i)
    if (i != k) g += abs2(gains(0, i));
  g += tx_distortion(c.B.row(k), antenna_power(W), hwi.kappa_tx_bs);
  g += cfg.noise.sigma_d2;
  for (int i = 0; i < K; ++i) {
    const double rho = (i == k) ? hwi.rho_s : 1.0;
    g += (1.0 + hwi.kappa_tx_user[i]) * rho * cfg.user_power[i] * abs2(c.C(k, i));
  }
  return g;
}

double sinr_B(int k, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  const double signal = desired_B(k, c, W);
  const double gamma = gamma_B(k, c, W, cfg);
  const double distortion = cfg.hwi.kappa_rx_user[k] * (signal + gamma);
  return signal / (gamma + distortion);
}

double gamma_S(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  check_user(k, K);
  const CMat proj = F.col(k).adjoint() * c.A;  // 1 x K
  double g = 0.0;
  for (int i = 0; i < K; ++i) {
    const double p = cfg.user_power[i] * abs2(proj(0, i));
    if (i != k) g += p;
    g += cfg.hwi.kappa_tx_user[i] * p;
  }
  g += F.col(k).squaredNorm() * cfg.noise.delta_u2;
  return g;
}

double bs_receive_distortion(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  check_user(k, K);
  // diagonal of E{y y^H} before receive distortion, SI and LI cancelled
  RVec diag = RVec::Constant(c.A.rows(), cfg.noise.delta_u2);
  for (int i = 0; i < K; ++i)
    diag += (1.0 + cfg.hwi.kappa_tx_user[i]) * cfg.user_power[i] * c.A.col(i).cwiseAbs2();
  return cfg.hwi.kappa_rx_bs * F.col(k).cwiseAbs2().dot(diag);
}

double sinr_S(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg) {
  const double signal = cfg.user_power[k] * abs2(cdouble(F.col(k).dot(c.A.col(k))));
  return signal / (gamma_S(k, c, F, cfg) + bs_receive_distortion(k, c, F, cfg));
}

namespace {

double eve_common(int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  // uplink HWI leakage plus the BS transmit distortion; shared by both directions
  double g = 0.0;
  for (int i = 0; i < cfg.users(); ++i)
    g += cfg.hwi.kappa_tx_user[i] * cfg.user_power[i] * abs2(c.U(l, i));
  g += tx_distortion(c.E.row(l), antenna_power(W), cfg.hwi.kappa_tx_bs);
  return g;
}

}  // namespace

double gamma_E_down(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  check_user(k, K);
  require(l >= 0 && l < c.E.rows(), "eavesdropper index out of range");
  const CMat leak = c.E.row(l) * W;
  double g = eve_common(l, c, W, cfg);
  for (int i = 0; i < K; ++i) {
    g += cfg.user_power[i] * abs2(c.U(l, i));
    if (i != k) g += abs2(leak(0, i));
  }
  return g;
}

double gamma_E_up(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  check_user(k, K);
  require(l >= 0 && l < c.E.rows(), "eavesdropper index out of range");
  const CMat leak = c.E.row(l) * W;
  double g = eve_common(l, c, W, cfg);
  for (int i = 0; i < K; ++i) {
    if (i != k) g += cfg.user_power[i] * abs2(c.U(l, i));
    g += abs2(leak(0, i));
  }
  return g;
}

EveSinr sinr_E(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  EveSinr s;
  s.down = abs2(cdouble((c.E.row(l) * W.col(k))(0, 0))) / (gamma_E_down(k, l, c, W, cfg) + cfg.noise.mu_d2);
  s.up = cfg.user_power[k] * abs2(c.U(l, k)) / (gamma_E_up(k, l, c, W, cfg) + cfg.noise.mu_u2);
  return s;
}

double secrecy_rate(double rate_B, double rate_S, double max_rate_E) {
  return std::max(0.0, rate_B + rate_S - max_rate_E);
}

double ssr(const RVec &secrecy_rates) { return secrecy_rates.sum(); }

LinkBudget evaluate(const Cascade &c, const CMat &W, const PhysicalConfig &cfg) {
  const int K = cfg.users();
  const auto L = static_cast<int>(c.E.rows());
  require(W.cols() == K && W.rows() == c.B.cols(), "evaluate: W must be Nt x K");
  const CMat F = combiner(c);

  LinkBudget b;
  b.sinr_B.resize(K);
  b.sinr_S.resize(K);
  b.rate_B.resize(K);
  b.rate_S.resize(K);
  b.rate_sec.resize(K);
  b.sinr_Ed.resize(K, L);
  b.sinr_Eu.resize(K, L);
  b.rate_E.resize(K, L);
  for (int k = 0; k < K; ++k) {
    b.sinr_B(k) = sinr_B(k, c, W, cfg);
    b.sinr_S(k) = sinr_S(k, c, F, cfg);
    b.rate_B(k) = std::log2(1.0 + b.sinr_B(k));
    b.rate_S(k) = std::log2(1.0 + b.sinr_S(k));
    for (int l = 0; l < L; ++l) {
      const EveSinr e = sinr_E(k, l, c, W, cfg);
      b.sinr_Ed(k, l) = e.down;
      b.sinr_Eu(k, l) = e.up;
      b.rate_E(k, l) = std::log2(1.0 + e.down) + std::log2(1.0 + e.up);
    }
    b.rate_sec(k) = secrecy_rate(b.rate_B(k), b.rate_S(k), b.rate_E.row(k).maxCoeff());
  }
  b.ssr = ssr(b.rate_sec);
  return b;
}

LinkBudget evaluate(const ChannelSet &channels, const Action &action, const PhysicalConfig &cfg) {
  return evaluate(cascade(channels, action.theta_phases, channels.phase_noise), action.W, cfg);
}

}  // namespace rissec
