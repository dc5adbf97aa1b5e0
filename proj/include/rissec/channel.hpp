#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rissec/numerics.hpp"
#include "rissec/random.hpp"

namespace rissec {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point &a, const Point &b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// 2-D placement of every node, in meters.
struct Geometry {
  Point bs{0.0, 0.0};
  Point ris{20.0, 100.0};
  std::vector<Point> users;
  std::vector<Point> eves;

  void validate() const;
};

/// Square in which users and eavesdroppers are scattered.
struct PlacementArea {
  double x_min = 100.0;
  double x_max = 200.0;
  double y_min = 0.0;
  double y_max = 100.0;
};

Geometry random_geometry(Rng &rng, int users, int eves, const PlacementArea &area = {});

struct ChannelParams {
  double path_loss_exponent = 2.0;
  double pl0_db = -30.0;  // at d0 = 1 m
  double rician_factor = 10.0;
  double element_spacing = 0.5;  // d / lambda

  void validate() const;
};

struct Sizes {
  int M = 8;    // RIS elements
  int Nt = 4;   // BS transmit antennas
  int Nr = 4;   // BS receive antennas
  int K = 2;    // legitimate users
  int L = 2;    // eavesdroppers

  void validate() const;
};

/// One realization of every reflect link plus the RIS phase-noise draw.
struct ChannelSet {
  CMat H_d;                // M x Nt, BS -> RIS
  CMat H_u;                // M x Nr, RIS -> BS (used as H_u^H)
  std::vector<CVec> h_d;   // K of M x 1, RIS -> user
  std::vector<CVec> h_u;   // K of M x 1, user -> RIS
  std::vector<CVec> g_d;   // L of M x 1, RIS -> eve (downlink leakage)
  std::vector<CVec> g_u;   // L of M x 1, RIS -> eve (uplink leakage)
  RVec phase_noise;        // M, radians in [-pi/2, pi/2]

  Sizes sizes() const;
  void validate(const Sizes &expected) const;
};

/// Large-scale gain 10^((PL0 - 10 alpha log10 d)/10).
double path_loss_linear(double d, const ChannelParams &params);

/// ULA response exp(j 2 pi (d/lambda) w sin(angle)), w = 0..count-1.
CVec steering(int count, double angle, double spacing);

/// Rank-1 line-of-sight matrix a_rx(aoa) a_tx(aod)^H.
CMat los_component(int rx_count, int tx_count, double aoa, double aod, double spacing);

/// sqrt(gain) (sqrt(eps/(eps+1)) LoS + sqrt(1/(eps+1)) NLoS).
CMat sample_rician(Rng &rng, int rows, int cols, double gain, double rician_factor, double aoa,
                   double aod, double spacing);

RVec sample_phase_noise(Rng &rng, int M);

/// diag(e^{j dtheta_m}).
CMat phase_noise_matrix(const RVec &phase_noise);

ChannelSet sample_channel_set(Rng &rng, const Geometry &geometry, const ChannelParams &params,
                              const Sizes &sizes);

// Channel dump: JSON record with every complex entry stored as a [re, im] pair.
void write_channel_set(const ChannelSet &channels, const std::filesystem::path &path);
ChannelSet read_channel_set(const std::filesystem::path &path);
std::string channel_set_to_json(const ChannelSet &channels);
ChannelSet channel_set_from_json(const std::string &text);

}  // namespace rissec
