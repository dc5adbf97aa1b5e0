#pragma once

#include <vector>

#include "rissec/channel.hpp"
#include "rissec/numerics.hpp"

namespace rissec {

/// Transceiver impairment severities. Eavesdroppers are ideal receivers.
struct HwiConfig {
  double kappa_tx_bs = 0.01;                // BS transmit distortion
  double kappa_rx_bs = 0.01;                // BS receive distortion
  std::vector<double> kappa_tx_user;        // per user, uplink transmit distortion
  std::vector<double> kappa_rx_user;        // per user, downlink receive distortion
  double rho_s = 1.0;                       // residual RIS self-interference at the users

  static HwiConfig uniform(int K, double kappa, double rho_s = 1.0);
  void validate(int K) const;
};

/// Noise powers in watts.
struct NoiseConfig {
  double sigma2 = 0.0;     // user thermal noise
  double sigma_d2 = 0.0;   // user thermal noise plus residual loop interference
  double delta_u2 = 0.0;   // BS per-antenna residual noise after SI/LI cancellation
  double mu_d2 = 0.0;      // eavesdropper noise, downlink decoding
  double mu_u2 = 0.0;      // eavesdropper noise, uplink decoding

  /// Thermal floor from a noise density (dBm/Hz) and bandwidth (Hz), with the 1.1 residual factors.
  static NoiseConfig from_density(double density_dbm_hz, double bandwidth_hz);
  void validate() const;
};

/// Everything besides the channels and the action that the link budget depends on.
struct PhysicalConfig {
  double p_max = 0.1;                // watts
  std::vector<double> user_power;    // P_k, watts
  HwiConfig hwi;
  NoiseConfig noise;

  int users() const { return static_cast<int>(user_power.size()); }
  void validate() const;
};

struct Action {
  CMat W;               // Nt x K precoder
  RVec theta_phases;    // M RIS phases, radians; amplitudes fixed at 1
};

/// Effective end-to-end channels through the RIS for one (Theta, Phi) pair.
struct Cascade {
  CMat B;   // K x Nt, row k = h_{d,k}^H Theta Phi H_d
  CMat E;   // L x Nt, row l = g_{d,l}^H Theta Phi H_d
  CMat A;   // Nr x K, col i = H_u^H Theta Phi h_{u,i}
  CMat C;   // K x K, (k, i) = h_{d,k}^H Theta Phi h_{u,i}
  CMat U;   // L x K, (l, i) = g_{u,l}^H Theta Phi h_{u,i}
};

struct LinkBudget {
  RVec sinr_B, sinr_S;          // per user
  Eigen::MatrixXd sinr_Ed;      // K x L
  Eigen::MatrixXd sinr_Eu;      // K x L
  RVec rate_B, rate_S;          // bits/s/Hz
  Eigen::MatrixXd rate_E;       // K x L, downlink + uplink leakage
  RVec rate_sec;                // per user, clamped at zero
  double ssr = 0.0;

  double sum_rate_B() const { return rate_B.sum(); }
  double sum_rate_S() const { return rate_S.sum(); }
  /// Sum over users of the strongest eavesdropper's leakage.
  double sum_max_rate_E() const;
};

/// Scale W onto the power ball Tr(WW^H) <= p_max when it lies outside.
CMat project_precoder(const CMat &W, double p_max);

/// diag(e^{j theta_m}).
CMat build_theta(const RVec &phases);

Cascade cascade(const ChannelSet &channels, const RVec &theta_phases, const RVec &phase_noise);

/// Unit-norm matched-filter combiner F (Nr x K) aligned with each user's uplink channel.
CMat combiner(const Cascade &c);

/// Per-antenna transmit power diag(sum_i w_i w_i^H) as a vector.
RVec antenna_power(const CMat &W);

double gamma_B(int k, const Cascade &c, const CMat &W, const PhysicalConfig &cfg);
double sinr_B(int k, const Cascade &c, const CMat &W, const PhysicalConfig &cfg);

double gamma_S(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg);
/// Receive-distortion power at the BS seen through combiner column k.
double bs_receive_distortion(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg);
double sinr_S(int k, const Cascade &c, const CMat &F, const PhysicalConfig &cfg);

double gamma_E_down(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg);
double gamma_E_up(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg);

struct EveSinr {
  double down = 0.0;
  double up = 0.0;
};
EveSinr sinr_E(int k, int l, const Cascade &c, const CMat &W, const PhysicalConfig &cfg);

/// [R_B + R_S - max_l R_E]^+.
double secrecy_rate(double rate_B, double rate_S, double max_rate_E);
double ssr(const RVec &secrecy_rates);

/// Full evaluation for the action applied under the channel's current phase noise.
LinkBudget evaluate(const ChannelSet &channels, const Action &action, const PhysicalConfig &cfg);
LinkBudget evaluate(const Cascade &c, const CMat &W, const PhysicalConfig &cfg);

}  // namespace rissec
