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

#ifndef SIMCAL_NN_HPP_
#define SIMCAL_NN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "simcal/graph.hpp"
#include "simcal/mat.hpp"

namespace simcal::nn {

enum class Activation { kIdentity, kTanh, kRelu, kSigmoid };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

struct DenseLayer {
  Mat w;  // in x out
  Mat b;  // 1 x out
};

struct ModelWeights {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kTanh;

  int input_width() const { return layers.front().w.rows; }
  int output_width() const { return layers.back().w.cols; }
};

// Weights uniform in +/- sqrt(6 / (fan_in + fan_out)), biases zero.
// Deterministic per seed.
ModelWeights build_mlp(const std::vector<int>& layer_sizes, Activation act,
                       uint64_t seed);

// Parameter nodes for every layer, viewing the weights in place.
struct MlpNodes {
  std::vector<ad::NodeRef> w;
  std::vector<ad::NodeRef> b;
};

MlpNodes bind_mlp(ad::CompGraph& g, const ModelWeights& weights);

// x is (batch x in). Hidden layers pass through the activation; the final
// layer is linear unless final_activation is set.
ad::NodeRef apply_mlp(ad::CompGraph& g, const MlpNodes& nodes,
                      const ModelWeights& weights, ad::NodeRef x,
                      bool final_activation = false);

// Single forward pass for one input row; records all intermediates in g.
ad::NodeRef forward(ad::CompGraph& g, const ModelWeights& weights,
                    const std::vector<double>& input);

struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const std::vector<const Mat*>& params);

// One Adam step with bias correction. Shapes must match the state; a NaN
// gradient raises NumericError naming the offending tensor.
void adam_step_tensors(const std::vector<Mat*>& params,
                       const std::vector<const Mat*>& grads,
                       const std::vector<std::string>& names, AdamState& state,
                       double lr);

// Convenience wrapper over a whole MLP; grads ordered [w0, b0, w1, b1, ...].
void adam_step(ModelWeights& weights, const std::vector<Mat>& grads,
               AdamState& state, double lr);

nlohmann::json weights_to_json(const ModelWeights& w);
ModelWeights weights_from_json(const nlohmann::json& j);

}  // namespace simcal::nn

#endif  // SIMCAL_NN_HPP_
