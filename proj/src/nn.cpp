// Copyright 2026 The simcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "simcal/nn.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "simcal/error.hpp"
#include "simcal/kernels.hpp"
#include "simcal/rng.hpp"

namespace simcal::nn {

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string activation_to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "tanh";
}

ModelWeights build_mlp(const std::vector<int>& layer_sizes, Activation act,
                       uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("build_mlp: need at least 2 layer sizes, got " +
                      std::to_string(layer_sizes.size()));
  }
  for (int s : layer_sizes) {
    if (s <= 0) {
      throw ConfigError("build_mlp: non-positive layer size " + std::to_string(s));
    }
  }
  ModelWeights w;
  w.activation = act;
  for (size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int fan_in = layer_sizes[i];
    const int fan_out = layer_sizes[i + 1];
    DenseLayer layer{Mat(fan_in, fan_out), Mat(1, fan_out)};
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(derive_seed(seed, "mlp-layer", i));
    for (double& v : layer.w.data) v = rng.uniform(-bound, bound);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

MlpNodes bind_mlp(ad::CompGraph& g, const ModelWeights& weights) {
  MlpNodes nodes;
  for (const auto& layer : weights.layers) {
    nodes.w.push_back(g.param(layer.w.ptr(), layer.w.rows, layer.w.cols));
    nodes.b.push_back(g.param(layer.b.ptr(), 1, layer.b.cols));
  }
  return nodes;
}

namespace {
ad::NodeRef activate(ad::CompGraph& g, Activation act, ad::NodeRef x) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kTanh: return g.tanh(x);
    case Activation::kRelu: return g.relu(x);
    case Activation::kSigmoid: return g.sigmoid(x);
  }
  return x;
}
}  // namespace

ad::NodeRef apply_mlp(ad::CompGraph& g, const MlpNodes& nodes,
                      const ModelWeights& weights, ad::NodeRef x,
                      bool final_activation) {
  ad::NodeRef h = x;
  for (size_t i = 0; i < nodes.w.size(); ++i) {
    const bool last = (i + 1 == nodes.w.size());
    const bool act = !last || final_activation;
    if (act && weights.activation == Activation::kTanh) {
      h = g.affine_tanh(h, nodes.w[i], nodes.b[i]);
    } else {
      h = g.affine(h, nodes.w[i], nodes.b[i]);
      if (act) h = activate(g, weights.activation, h);
    }
  }
  return h;
}

ad::NodeRef forward(ad::CompGraph& g, const ModelWeights& weights,
                    const std::vector<double>& input) {
  if (static_cast<int>(input.size()) != weights.input_width()) {
    throw ShapeError("forward: input width " + std::to_string(input.size()) +
                     " does not match first layer input " +
                     std::to_string(weights.input_width()));
  }
  Mat in(1, static_cast<int>(input.size()));
  in.data = input;
  const ad::NodeRef x = g.constant(in);
  const MlpNodes nodes = bind_mlp(g, weights);
  return apply_mlp(g, nodes, weights, x);
}

AdamState make_adam_state(const std::vector<const Mat*>& params) {
  AdamState s;
  for (const Mat* p : params) {
    s.m.emplace_back(p->rows, p->cols);
    s.v.emplace_back(p->rows, p->cols);
  }
  return s;
}

void adam_step_tensors(const std::vector<Mat*>& params,
                       const std::vector<const Mat*>& grads,
                       const std::vector<std::string>& names, AdamState& state,
                       double lr) {
  if (lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam: tensor count mismatch");
  }
  const auto& K = kern::active();
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.m[i])) {
      throw ShapeError("adam: shape mismatch on tensor '" +
                       (i < names.size() ? names[i] : std::to_string(i)) + "'");
    }
    if (K.has_nonfinite(grads[i]->ptr(), grads[i]->size())) {
      throw NumericError("adam: non-finite gradient on tensor '" +
                         (i < names.size() ? names[i] : std::to_string(i)) + "'");
    }
  }
  state.t += 1;
  const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
  for (size_t i = 0; i < params.size(); ++i) {
    K.adam_update(params[i]->ptr(), grads[i]->ptr(), state.m[i].ptr(),
                  state.v[i].ptr(), params[i]->size(), lr, state.beta1,
                  state.beta2, state.eps, bc1, bc2);
  }
}

void adam_step(ModelWeights& weights, const std::vector<Mat>& grads,
               AdamState& state, double lr) {
  std::vector<Mat*> params;
  std::vector<const Mat*> gptrs;
  std::vector<std::string> names;
  for (size_t i = 0; i < weights.layers.size(); ++i) {
    params.push_back(&weights.layers[i].w);
    params.push_back(&weights.layers[i].b);
    names.push_back("layer" + std::to_string(i) + ".w");
    names.push_back("layer" + std::to_string(i) + ".b");
  }
  if (grads.size() != params.size()) {
    throw ShapeError("adam_step: expected " + std::to_string(params.size()) +
                     " gradient tensors, got " + std::to_string(grads.size()));
  }
  for (const Mat& m : grads) gptrs.push_back(&m);
  adam_step_tensors(params, gptrs, names, state, lr);
}

nlohmann::json weights_to_json(const ModelWeights& w) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : w.layers) {
    nlohmann::json jw = nlohmann::json::array();
    for (int r = 0; r < layer.w.rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < layer.w.cols; ++c) row.push_back(layer.w(r, c));
      jw.push_back(std::move(row));
    }
    nlohmann::json jb = nlohmann::json::array();
    for (int c = 0; c < layer.b.cols; ++c) jb.push_back(layer.b(0, c));
    layers.push_back({{"w", std::move(jw)}, {"b", std::move(jb)}});
  }
  return {{"layers", std::move(layers)},
          {"activation", activation_to_string(w.activation)}};
}

ModelWeights weights_from_json(const nlohmann::json& j) {
  ModelWeights w;
  w.activation = activation_from_string(j.at("activation").get<std::string>());
  for (const auto& jl : j.at("layers")) {
    const auto& jw = jl.at("w");
    const int rows = static_cast<int>(jw.size());
    if (rows == 0) throw ParseError("weights: empty weight matrix");
    const int cols = static_cast<int>(jw.at(0).size());
    DenseLayer layer{Mat(rows, cols), Mat(1, cols)};
    for (int r = 0; r < rows; ++r) {
      if (static_cast<int>(jw.at(r).size()) != cols) {
        throw ParseError("weights: ragged weight matrix row " + std::to_string(r));
      }
      for (int c = 0; c < cols; ++c) layer.w(r, c) = jw.at(r).at(c).get<double>();
    }
    const auto& jb = jl.at("b");
    if (static_cast<int>(jb.size()) != cols) {
      throw ParseError("weights: bias width mismatch");
    }
    for (int c = 0; c < cols; ++c) layer.b(0, c) = jb.at(c).get<double>();
    w.layers.push_back(std::move(layer));
  }
  if (w.layers.empty()) throw ParseError("weights: no layers");
  for (size_t i = 0; i + 1 < w.layers.size(); ++i) {
    if (w.layers[i].w.cols != w.layers[i + 1].w.rows) {
      throw ParseError("weights: layer " + std::to_string(i) +
                       " output width does not chain to layer " +
                       std::to_string(i + 1));
    }
  }
  return w;
}

}  // namespace simcal::nn
