#include "rissec/channel.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rissec {

void Geometry::validate() const {
  require(!users.empty(), "geometry: at least one user required");
  require(!eves.empty(), "geometry: at least one eavesdropper required");
  require(distance(bs, ris) > 0.0, "geometry: BS and RIS coincide");
  for (const auto &p : users) require(distance(ris, p) > 0.0, "geometry: user placed on the RIS");
  for (const auto &p : eves) require(distance(ris, p) > 0.0, "geometry: eve placed on the RIS");
}

Geometry random_geometry(Rng &rng, int users, int eves, const PlacementArea &area) {
  require(users >= 1 && eves >= 1, "random_geometry: need K >= 1 and L >= 1");
  Geometry g;
  auto draw = [&] { return Point{uniform(rng, area.x_min, area.x_max), uniform(rng, area.y_min, area.y_max)}; };
  for (int k = 0; k < users; ++k) g.users.push_back(draw());
  for (int l = 0; l < eves; ++l) g.eves.push_back(draw());
  return g;
}

void ChannelParams::validate() const {
  require(path_loss_exponent >= 0.0, "channel: path loss exponent must be >= 0");
  require(rician_factor >= 0.0, "channel: Rician factor must be >= 0");
  require(element_spacing > 0.0, "channel: element spacing must be > 0");
}

void Sizes::validate() const {
  require(M >= 1 && Nt >= 1 && Nr >= 1 && K >= 1 && L >= 1, "sizes: every dimension must be >= 1");
}

Sizes ChannelSet::sizes() const {
  return Sizes{static_cast<int>(H_d.rows()), static_cast<int>(H_d.cols()),
               static_cast<int>(H_u.cols()), static_cast<int>(h_d.size()),
               static_cast<int>(g_d.size())};
}

void ChannelSet::validate(const Sizes &s) const {
  require(H_d.rows() == s.M && H_d.cols() == s.Nt, "channels: H_d must be M x Nt");
  require(H_u.rows() == s.M && H_u.cols() == s.Nr, "channels: H_u must be M x Nr");
  require(static_cast<int>(h_d.size()) == s.K && static_cast<int>(h_u.size()) == s.K,
          "channels: expected K user channels");
  require(static_cast<int>(g_d.size()) == s.L && static_cast<int>(g_u.size()) == s.L,
          "channels: expected L eavesdropper channels");
  for (const auto *group : {&h_d, &h_u, &g_d, &g_u})
    for (const auto &v : *group) require(v.size() == s.M, "channels: link vectors must be M x 1");
  require(phase_noise.size() == s.M, "channels: phase noise must have M entries");
}

double path_loss_linear(double d, const ChannelParams &params) {
  require(d > 0.0, "path_loss_linear: distance must be positive");
  return std::pow(10.0, (params.pl0_db - 10.0 * params.path_loss_exponent * std::log10(d)) / 10.0);
}

CVec steering(int count, double angle, double spacing) {
  require(count >= 1, "steering: element count must be >= 1");
  CVec a(count);
  const double step = 2.0 * kPi * spacing * std::sin(angle);
  for (int w = 0; w < count; ++w) a(w) = std::polar(1.0, step * w);
  return a;
}

CMat los_component(int rx_count, int tx_count, double aoa, double aod, double spacing) {
  return steering(rx_count, aoa, spacing) * steering(tx_count, aod, spacing).adjoint();
}

CMat sample_rician(Rng &rng, int rows, int cols, double gain, double rician_factor, double aoa,
                   double aod, double spacing) {
  require(gain >= 0.0 && rician_factor >= 0.0, "sample_rician: gain and Rician factor must be >= 0");
  const double los_weight = std::sqrt(rician_factor / (rician_factor + 1.0));
  const double nlos_weight = std::sqrt(1.0 / (rician_factor + 1.0));
  CMat h = los_component(rows, cols, aoa, aod, spacing) * los_weight;
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] += nlos_weight * complex_normal(rng);
  return h * std::sqrt(gain);
}

RVec sample_phase_noise(Rng &rng, int M) {
  require(M >= 1, "sample_phase_noise: M must be >= 1");
  RVec out(M);
  for (int m = 0; m < M; ++m) out(m) = uniform(rng, -kPi / 2.0, kPi / 2.0);
  return out;
}

CMat phase_noise_matrix(const RVec &phase_noise) {
  CMat phi = CMat::Zero(phase_noise.size(), phase_noise.size());
  for (Eigen::Index m = 0; m < phase_noise.size(); ++m) phi(m, m) = std::polar(1.0, phase_noise(m));
  return phi;
}

namespace {

// Each link gets its own substream so that adding a link never perturbs another.
CMat draw_link(std::uint64_t base_seed, std::uint64_t link, int rows, int cols, double hop,
               const ChannelParams &params) {
  Rng rng = make_rng(base_seed, link);
  const double aoa = uniform(rng, -kPi / 2.0, kPi / 2.0);
  const double aod = uniform(rng, -kPi / 2.0, kPi / 2.0);
  return sample_rician(rng, rows, cols, path_loss_linear(hop, params), params.rician_factor, aoa, aod,
                       params.element_spacing);
}

}  // namespace

ChannelSet sample_channel_set(Rng &rng, const Geometry &geometry, const ChannelParams &params,
                              const Sizes &sizes) {
  sizes.validate();
  geometry.validate();
  params.validate();
  require(static_cast<int>(geometry.users.size()) == sizes.K, "sample_channel_set: K mismatch with geometry");
  require(static_cast<int>(geometry.eves.size()) == sizes.L, "sample_channel_set: L mismatch with geometry");

  const std::uint64_t base = rng();
  const double bs_ris = distance(geometry.bs, geometry.ris);
  std::uint64_t link = 0;

  ChannelSet ch;
  ch.H_d = draw_link(base, link++, sizes.M, sizes.Nt, bs_ris, params);
  ch.H_u = draw_link(base, link++, sizes.M, sizes.Nr, bs_ris, params);
  auto vector_link = [&](const Point &node) -> CVec {
    return draw_link(base, link++, sizes.M, 1, distance(geometry.ris, node), params).col(0);
  };
  for (const auto &p : geometry.users) ch.h_d.push_back(vector_link(p));
  for (const auto &p : geometry.users) ch.h_u.push_back(vector_link(p));
  for (const auto &p : geometry.eves) ch.g_d.push_back(vector_link(p));
  for (const auto &p : geometry.eves) ch.g_u.push_back(vector_link(p));
  ch.phase_noise = sample_phase_noise(rng, sizes.M);
  return ch;
}

// ---------------------------------------------------------------------------
// Channel dump

namespace {

using nlohmann::json;

json matrix_to_json(const CMat &m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) entries.push_back({m.data()[i].real(), m.data()[i].imag()});
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

CMat matrix_from_json(const json &j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto &entries = j.at("entries");
  require(static_cast<Eigen::Index>(entries.size()) == rows * cols, "channel dump: entry count mismatch");
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = {entries[i].at(0).get<double>(), entries[i].at(1).get<double>()};
  return m;
}

json vectors_to_json(const std::vector<CVec> &vs) {
  json out = json::array();
  for (const auto &v : vs) out.push_back(matrix_to_json(CMat(v)));
  return out;
}

std::vector<CVec> vectors_from_json(const json &j) {
  std::vector<CVec> out;
  for (const auto &e : j) {
    CMat m = matrix_from_json(e);
    require(m.cols() == 1, "channel dump: link vector must have one column");
    out.emplace_back(m.col(0));
  }
  return out;
}

}  // namespace

std::string channel_set_to_json(const ChannelSet &ch) {
  json j;
  j["format"] = "rissec.channel_set";
  j["version"] = 1;
  j["H_d"] = matrix_to_json(ch.H_d);
  j["H_u"] = matrix_to_json(ch.H_u);
  j["h_d"] = vectors_to_json(ch.h_d);
  j["h_u"] = vectors_to_json(ch.h_u);
  j["g_d"] = vectors_to_json(ch.g_d);
  j["g_u"] = vectors_to_json(ch.g_u);
  j["phase_noise"] = std::vector<double>(ch.phase_noise.data(), ch.phase_noise.data() + ch.phase_noise.size());
  return j.dump(1);
}

ChannelSet channel_set_from_json(const std::string &text) {
  const json j = json::parse(text);
  require(j.value("format", "") == "rissec.channel_set", "channel dump: unrecognised format tag");
  ChannelSet ch;
  ch.H_d = matrix_from_json(j.at("H_d"));
  ch.H_u = matrix_from_json(j.at("H_u"));
  ch.h_d = vectors_from_json(j.at("h_d"));
  ch.h_u = vectors_from_json(j.at("h_u"));
  ch.g_d = vectors_from_json(j.at("g_d"));
  ch.g_u = vectors_from_json(j.at("g_u"));
  const auto pn = j.at("phase_noise").get<std::vector<double>>();
  ch.phase_noise = Eigen::Map<const RVec>(pn.data(), static_cast<Eigen::Index>(pn.size()));
  ch.validate(ch.sizes());
  return ch;
}

void write_channel_set(const ChannelSet &channels, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write channel dump: " + path.string());
  out << channel_set_to_json(channels) << '\n';
}

ChannelSet read_channel_set(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read channel dump: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return channel_set_from_json(buf.str());
}

}  // namespace rissec
