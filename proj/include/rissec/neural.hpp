#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rissec/numerics.hpp"
#include "rissec/random.hpp"

namespace rissec::nn {

enum class Activation { relu, tanh, linear };

inline const char *to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

inline Activation activation_from_string(const std::string &s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw ContractViolation("unknown activation '" + s + "'");
}

/// Layer widths plus one activation per non-input layer.
struct Architecture {
  std::vector<int> sizes;
  std::vector<Activation> activations;

  int inputs() const { return sizes.front(); }
  int outputs() const { return sizes.back(); }
  bool operator==(const Architecture &) const = default;

  void validate() const {
    require(sizes.size() >= 2, "architecture: need at least input and output layers");
    require(activations.size() == sizes.size() - 1, "architecture: one activation per layer");
    for (int s : sizes) require(s >= 1, "architecture: layer widths must be >= 1");
  }
};

template <typename Scalar>
struct Layer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::linear;
};

/// Same shapes as the parameters; used for gradients and Adam moments.
template <typename Scalar>
struct ParamSet {
  std::vector<typename Layer<Scalar>::Matrix> weight;
  std::vector<typename Layer<Scalar>::Vector> bias;

  void set_zero() {
    for (auto &w : weight) w.setZero();
    for (auto &b : bias) b.setZero();
  }
};

/// Dense feed-forward network. Batches are column-stacked: one sample per column.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = typename Layer<Scalar>::Matrix;
  using Vector = typename Layer<Scalar>::Vector;

  /// Per-layer inputs and post-activation outputs of one forward pass.
  struct Cache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;
  };

  Mlp() = default;
  explicit Mlp(std::vector<Layer<Scalar>> layers) : layers_(std::move(layers)) { check_chain(); }

  /// Zero-initialised network of the given architecture.
  static Mlp zeros(const Architecture &arch) {
    arch.validate();
    std::vector<Layer<Scalar>> layers;
    for (std::size_t i = 0; i + 1 < arch.sizes.size(); ++i)
      layers.push_back({Matrix::Zero(arch.sizes[i + 1], arch.sizes[i]), Vector::Zero(arch.sizes[i + 1]),
                        arch.activations[i]});
    return Mlp(std::move(layers));
  }

  Architecture architecture() const {
    Architecture a;
    a.sizes.push_back(static_cast<int>(layers_.front().weight.cols()));
    for (const auto &l : layers_) {
      a.sizes.push_back(static_cast<int>(l.weight.rows()));
      a.activations.push_back(l.activation);
    }
    return a;
  }

  int inputs() const { return static_cast<int>(layers_.front().weight.cols()); }
  int outputs() const { return static_cast<int>(layers_.back().weight.rows()); }
  std::size_t depth() const { return layers_.size(); }
  std::vector<Layer<Scalar>> &layers() { return layers_; }
  const std::vector<Layer<Scalar>> &layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Matrix forward(const Matrix &x, Cache *cache = nullptr) const {
    require(x.rows() == inputs(), "mlp forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                      std::to_string(inputs()));
    if (cache) {
      cache->inputs.clear();
      cache->outputs.clear();
    }
    Matrix a = x;
    for (const auto &l : layers_) {
      Matrix z = l.weight * a;
      z.colwise() += l.bias;
      apply(l.activation, z);
      if (cache) {
        cache->inputs.push_back(std::move(a));
        cache->outputs.push_back(z);
      }
      a = std::move(z);
    }
    return a;
  }

  Vector forward_one(const Vector &x) const { return forward(Matrix(x)).col(0); }

  /// Reverse pass from dLoss/dOutput. Parameter gradients are summed over the batch.
  ParamSet<Scalar> backward(const Cache &cache, const Matrix &upstream, Matrix *input_grad = nullptr) const {
    require(cache.outputs.size() == layers_.size(), "mlp backward: cache does not match network");
    ParamSet<Scalar> g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    Matrix delta = upstream;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto &l = layers_[i];
      apply_derivative(l.activation, cache.outputs[i], delta);
      g.weight[i].noalias() = delta * cache.inputs[i].transpose();
      g.bias[i] = delta.rowwise().sum();
      if (i > 0 || input_grad) {
        Matrix next = l.weight.transpose() * delta;
        delta = std::move(next);
      }
    }
    if (input_grad) *input_grad = std::move(delta);
    return g;
  }

  ParamSet<Scalar> zero_like() const {
    ParamSet<Scalar> p;
    for (const auto &l : layers_) {
      p.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      p.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return p;
  }

  bool all_finite() const {
    for (const auto &l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  template <typename Other>
  Mlp<Other> cast() const {
    std::vector<Layer<Other>> out;
    for (const auto &l : layers_) out.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.activation});
    return Mlp<Other>(std::move(out));
  }

 private:
  static void apply(Activation act, Matrix &z) {
    switch (act) {
      case Activation::relu: z = z.cwiseMax(Scalar(0)); break;
      case Activation::tanh: z = z.array().tanh().matrix(); break;
      case Activation::linear: break;
    }
  }

  // delta <- delta * f'(z), with f' expressed through the activation output
  static void apply_derivative(Activation act, const Matrix &out, Matrix &delta) {
    switch (act) {
      case Activation::relu: delta = (out.array() > Scalar(0)).select(delta, Scalar(0)); break;
      case Activation::tanh: delta.array() *= (Scalar(1) - out.array().square()); break;
      case Activation::linear: break;
    }
  }

  void check_chain() const {
    require(!layers_.empty(), "mlp: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      require(layers_[i].bias.size() == layers_[i].weight.rows(), "mlp: bias does not match layer width");
      if (i > 0)
        require(layers_[i].weight.cols() == layers_[i - 1].weight.rows(), "mlp: layer dimensions do not chain");
    }
  }

  std::vector<Layer<Scalar>> layers_;
};

/// Weights i.i.d. uniform on +-1/sqrt(fan_in), biases zero.
template <typename Scalar>
Mlp<Scalar> init_uniform(Rng &rng, const Architecture &arch) {
  Mlp<Scalar> net = Mlp<Scalar>::zeros(arch);
  for (auto &l : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = static_cast<Scalar>(u(rng));
  }
  return net;
}

template <typename Scalar>
struct AdamState {
  ParamSet<Scalar> m;
  ParamSet<Scalar> v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_network(const Mlp<Scalar> &net) {
    AdamState s;
    s.m = net.zero_like();
    s.v = net.zero_like();
    return s;
  }
};

/// One bias-corrected Adam descent step on `net` using gradient `grad`.
template <typename Scalar>
void adam_step(Mlp<Scalar> &net, const ParamSet<Scalar> &grad, AdamState<Scalar> &state, double lr) {
  require(grad.weight.size() == net.depth() && state.m.weight.size() == net.depth(),
          "adam_step: gradient/state shape mismatch");
  ++state.t;
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
  const auto step = static_cast<Scalar>(lr);
  const auto eps = static_cast<Scalar>(state.eps);
  auto update = [&](auto &param, const auto &g, auto &m, auto &v) {
    require(param.rows() == g.rows() && param.cols() == g.cols(), "adam_step: gradient shape mismatch");
    m = b1 * m + (Scalar(1) - b1) * g;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    param.array() -= step * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < net.depth(); ++i) {
    auto &l = net.layers()[i];
    update(l.weight, grad.weight[i], state.m.weight[i], state.v.weight[i]);
    update(l.bias, grad.bias[i], state.m.bias[i], state.v.bias[i]);
  }
}

/// target <- beta * online + (1 - beta) * target.
template <typename Scalar>
void soft_update(Mlp<Scalar> &target, const Mlp<Scalar> &online, double beta) {
  require(beta >= 0.0 && beta <= 1.0, "soft_update: beta must lie in [0, 1]");
  require(target.architecture() == online.architecture(), "soft_update: architectures differ");
  const auto b = static_cast<Scalar>(beta);
  for (std::size_t i = 0; i < target.depth(); ++i) {
    auto &t = target.layers()[i];
    const auto &o = online.layers()[i];
    if (beta == 1.0) {
      t.weight = o.weight;
      t.bias = o.bias;
    } else {
      t.weight = b * o.weight + (Scalar(1) - b) * t.weight;
      t.bias = b * o.bias + (Scalar(1) - b) * t.bias;
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint: JSON with layer sizes, activations and flat column-major parameters.

template <typename Scalar>
std::string to_json(const Mlp<Scalar> &net) {
  nlohmann::json j;
  j["format"] = "rissec.mlp";
  j["version"] = 1;
  const auto arch = net.architecture();
  j["sizes"] = arch.sizes;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &l : net.layers()) {
    std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"activation", to_string(l.activation)}, {"weight", w}, {"bias", b}});
  }
  j["layers"] = layers;
  return j.dump();
}

template <typename Scalar>
Mlp<Scalar> from_json(const std::string &text) {
  const auto j = nlohmann::json::parse(text);
  require(j.value("format", "") == "rissec.mlp", "checkpoint: unrecognised format tag");
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  const auto &layers = j.at("layers");
  require(layers.size() + 1 == sizes.size(), "checkpoint: layer count does not match sizes");
  std::vector<Layer<Scalar>> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto w = layers[i].at("weight").get<std::vector<double>>();
    const auto b = layers[i].at("bias").get<std::vector<double>>();
    require(w.size() == static_cast<std::size_t>(sizes[i] * sizes[i + 1]) &&
                b.size() == static_cast<std::size_t>(sizes[i + 1]),
            "checkpoint: parameter count mismatch in layer " + std::to_string(i));
    Layer<Scalar> l;
    l.weight = Eigen::Map<const Eigen::MatrixXd>(w.data(), sizes[i + 1], sizes[i]).template cast<Scalar>();
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), sizes[i + 1]).template cast<Scalar>();
    l.activation = activation_from_string(layers[i].at("activation").get<std::string>());
    out.push_back(std::move(l));
  }
  return Mlp<Scalar>(std::move(out));
}

template <typename Scalar>
void save(const Mlp<Scalar> &net, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << to_json(net) << '\n';
}

template <typename Scalar>
Mlp<Scalar> load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json<Scalar>(buf.str());
}

}  // namespace rissec::nn
