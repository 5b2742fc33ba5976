// Copyright 2026 The pbmvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small dense networks with exact backpropagation.
//
// Party models map a feature block to a P-dimensional embedding and end in
// tanh, so every embedding coordinate lies in [-1, 1]. The server model maps
// the embedding sum to class logits and is trained with softmax
// cross-entropy averaged over the minibatch.

#ifndef PBMVFL_NN_HPP_
#define PBMVFL_NN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/random.hpp"
#include "pbmvfl/tensor.hpp"

namespace pbmvfl {

enum class Activation { kIdentity, kTanh };

inline const char* to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "identity"; }

/// y = act(x W + bias); W is in_dim x out_dim.
struct DenseLayer {
  Tensor2 weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check(); }

  /// Builds an MLP over `dims` (input, hidden..., output). Weights and biases
  /// are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static DenseNet mlp(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) throw ShapeError("nn: bad mlp description");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      if (dims[l] == 0 || dims[l + 1] == 0) throw ShapeError("nn: zero-width layer");
      const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      std::uniform_real_distribution<double> init(-bound, bound);
      DenseLayer layer{Tensor2(dims[l], dims[l + 1]), std::vector<double>(dims[l + 1]), acts[l]};
      for (double& w : layer.weight.data()) w = init(rng);
      for (double& b : layer.bias) b = init(rng);
      layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
  }

  /// input -> hidden (tanh) -> p_dim (tanh).
  static DenseNet party_mlp(std::size_t input_dim, std::size_t hidden, std::size_t p_dim, Rng& rng) {
    const std::size_t dims[] = {input_dim, hidden, p_dim};
    const Activation acts[] = {Activation::kTanh, Activation::kTanh};
    return mlp(dims, acts, rng);
  }

  /// A single linear layer p_dim -> classes.
  static DenseNet server_linear(std::size_t p_dim, std::size_t classes, Rng& rng) {
    const std::size_t dims[] = {p_dim, classes};
    const Activation acts[] = {Activation::kIdentity};
    return mlp(dims, acts, rng);
  }

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::size_t num_params() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Mutable access bumps the version, invalidating outstanding caches.
  std::vector<DenseLayer>& mutable_layers() noexcept {
    ++version_;
    return layers_;
  }
  std::uint64_t version() const noexcept { return version_; }

  friend bool operator==(const DenseNet& a, const DenseNet& b) { return a.layers_ == b.layers_; }

 private:
  void check() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.bias.size() != layer.out_dim()) throw ShapeError("nn: bias length != layer width");
      if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) throw ShapeError("nn: layer widths do not chain");
    }
  }

  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// Per-layer gradients, congruent with the owning net.
struct GradSet {
  std::vector<Tensor2> weight;
  std::vector<std::vector<double>> bias;

  static GradSet zeros_like(const DenseNet& net) {
    GradSet g;
    for (const auto& l : net.layers()) {
      g.weight.emplace_back(l.weight.rows(), l.weight.cols());
      g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weight) for (double v : w.data()) s += v * v;
    for (const auto& b : bias) for (double v : b) s += v * v;
    return s;
  }

  friend bool operator==(const GradSet&, const GradSet&) = default;
};

/// Activations retained by a forward pass: the input and output of every
/// layer, stamped with the net version it was computed against.
struct ForwardCache {
  std::vector<Tensor2> inputs;
  std::vector<Tensor2> outputs;
  std::uint64_t net_version = 0;
};

inline Tensor2 forward(const DenseNet& net, const Tensor2& x, ForwardCache* cache = nullptr) {
  if (x.cols() != net.input_dim()) throw ShapeError("nn: input width does not match network");
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
    cache->net_version = net.version();
  }
  Tensor2 cur = x;
  for (const auto& layer : net.layers()) {
    Tensor2 next(cur.rows(), layer.out_dim());
    for (std::size_t r = 0; r < cur.rows(); ++r) {
      auto in = cur.row(r);
      auto out = next.row(r);
      std::copy(layer.bias.begin(), layer.bias.end(), out.begin());
      for (std::size_t i = 0; i < layer.in_dim(); ++i) {
        const double xi = in[i];
        auto w = layer.weight.row(i);
        for (std::size_t j = 0; j < layer.out_dim(); ++j) out[j] += xi * w[j];
      }
      if (layer.activation == Activation::kTanh) {
        for (double& v : out) v = std::tanh(v);
      }
    }
    if (cache) {
      cache->inputs.push_back(std::move(cur));
      cache->outputs.push_back(next);
    }
    cur = std::move(next);
  }
  return cur;
}

struct BackwardResult {
  GradSet grads;
  Tensor2 grad_input;
};

/// Backpropagates dLoss/dOutput through the cached forward pass.
inline BackwardResult backward(const DenseNet& net, const ForwardCache& cache, const Tensor2& grad_output) {
  if (cache.net_version != net.version() || cache.inputs.size() != net.layers().size()) {
    throw StaleCacheError("nn: forward cache does not belong to the current network state");
  }
  const std::size_t batch = cache.inputs.empty() ? 0 : cache.inputs.front().rows();
  require_shape(grad_output, batch, net.output_dim(), "nn backward");
  BackwardResult res{GradSet::zeros_like(net), {}};
  Tensor2 delta = grad_output;
  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const auto& layer = net.layers()[l];
    if (layer.activation == Activation::kTanh) {
      const auto& y = cache.outputs[l];
      for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] *= 1.0 - y.data()[i] * y.data()[i];
    }
    const auto& in = cache.inputs[l];
    auto& gw = res.grads.weight[l];
    auto& gb = res.grads.bias[l];
    Tensor2 prev(batch, layer.in_dim());
    for (std::size_t r = 0; r < batch; ++r) {
      auto d = delta.row(r);
      auto x = in.row(r);
      auto pd = prev.row(r);
      for (std::size_t j = 0; j < layer.out_dim(); ++j) gb[j] += d[j];
      for (std::size_t i = 0; i < layer.in_dim(); ++i) {
        auto w = layer.weight.row(i);
        auto g = gw.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < layer.out_dim(); ++j) {
          g[j] += x[i] * d[j];
          acc += w[j] * d[j];
        }
        pd[i] = acc;
      }
    }
    delta = std::move(prev);
  }
  res.grad_input = std::move(delta);
  return res;
}

struct PartyForward {
  Tensor2 embeddings;
  ForwardCache cache;
};

inline PartyForward forward_party(const DenseNet& net, const Tensor2& x_batch) {
  if (net.layers().empty() || net.layers().back().activation != Activation::kTanh) {
    throw ConfigError("nn: party network must end in tanh to bound its embeddings");
  }
  PartyForward out;
  out.embeddings = forward(net, x_batch, &out.cache);
  return out;
}

inline GradSet backward_party(const DenseNet& net, const ForwardCache& cache, const Tensor2& grad_hhat) {
  return backward(net, cache, grad_hhat).grads;
}

struct ServerForward {
  double loss = 0.0;
  Tensor2 probs;
  ForwardCache cache;
  std::vector<int> labels;
};

/// Mean softmax cross-entropy of the server net applied to the embedding sum.
inline ServerForward forward_server(const DenseNet& net, const Tensor2& h_sum, std::span<const int> labels) {
  if (labels.size() != h_sum.rows()) throw ShapeError("nn: label count != batch rows");
  ServerForward out;
  Tensor2 logits = forward(net, h_sum, &out.cache);
  const std::size_t k = logits.cols();
  out.probs = Tensor2(logits.rows(), k);
  out.labels.assign(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) throw DomainError("nn: label out of class range");
    auto z = logits.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom);
    for (std::size_t j = 0; j < k; ++j) out.probs(r, j) = std::exp(z[j] - zmax - log_denom);
    total += -(z[static_cast<std::size_t>(labels[r])] - zmax - log_denom);
  }
  out.loss = logits.rows() ? total / static_cast<double>(logits.rows()) : 0.0;
  return out;
}

struct ServerBackward {
  GradSet grad_theta0;
  Tensor2 grad_hhat;
};

inline ServerBackward backward_server(const DenseNet& net, const ServerForward& fwd) {
  const std::size_t batch = fwd.probs.rows();
  Tensor2 dlogits = fwd.probs;
  const double scale = batch ? 1.0 / static_cast<double>(batch) : 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    dlogits(r, static_cast<std::size_t>(fwd.labels[r])) -= 1.0;
    for (double& v : dlogits.row(r)) v *= scale;
  }
  auto res = backward(net, fwd.cache, dlogits);
  return {std::move(res.grads), std::move(res.grad_input)};
}

inline void sgd_step(DenseNet& net, const GradSet& grads, double eta) {
  if (!(eta >= 0.0)) throw ConfigError("nn: learning rate must be non-negative");
  if (grads.weight.size() != net.layers().size() || grads.bias.size() != net.layers().size()) {
    throw ShapeError("nn: gradient set does not match network");
  }
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& layer = net.layers()[l];
    require_shape(grads.weight[l], layer.weight.rows(), layer.weight.cols(), "nn sgd weight");
    if (grads.bias[l].size() != layer.bias.size()) throw ShapeError("nn: bias gradient length mismatch");
  }
  auto& layers = net.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weight.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * grads.weight[l].data()[i];
    for (std::size_t j = 0; j < layers[l].bias.size(); ++j) layers[l].bias[j] -= eta * grads.bias[l][j];
  }
}

/// Index of the largest entry in each row.
inline std::vector<int> argmax_rows(const Tensor2& t) {
  std::vector<int> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// Checkpoint format (text, whitespace separated, doubles at max_digits10):
//
//   pbmvfl-net 1
//   layers <L>
//   layer <in> <out> <tanh|identity>
//   <in*out weights, row-major>
//   <out biases>
//   ... repeated L times
inline void save_checkpoint(std::ostream& os, const DenseNet& net) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "pbmvfl-net 1\nlayers " << net.layers().size() << "\n";
  for (const auto& l : net.layers()) {
    os << "layer " << l.in_dim() << " " << l.out_dim() << " " << to_string(l.activation) << "\n";
    for (std::size_t i = 0; i < l.weight.size(); ++i) os << (i ? " " : "") << l.weight.data()[i];
    os << "\n";
    for (std::size_t j = 0; j < l.bias.size(); ++j) os << (j ? " " : "") << l.bias[j];
    os << "\n";
  }
  os.precision(old_precision);
}

inline DenseNet load_checkpoint(std::istream& is) {
  std::string tag, word;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> tag >> version) || tag != "pbmvfl-net" || version != 1) throw ConfigError("checkpoint: bad header");
  if (!(is >> word >> count) || word != "layers") throw ConfigError("checkpoint: missing layer count");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    std::size_t in = 0, out = 0;
    std::string act;
    if (!(is >> word >> in >> out >> act) || word != "layer") throw ConfigError("checkpoint: bad layer header");
    DenseLayer layer{Tensor2(in, out), std::vector<double>(out), Activation::kIdentity};
    if (act == "tanh") layer.activation = Activation::kTanh;
    else if (act != "identity") throw ConfigError("checkpoint: unknown activation " + act);
    for (double& w : layer.weight.data()) if (!(is >> w)) throw ConfigError("checkpoint: truncated weights");
    for (double& b : layer.bias) if (!(is >> b)) throw ConfigError("checkpoint: truncated biases");
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

}  // namespace pbmvfl

#endif  // PBMVFL_NN_HPP_
