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
//
// Structural model from environment parameters and an action to per-factor
// trajectory differences, gated by a learned bipartite edge-probability
// matrix.
//
// Architecture: a shared per-dimension encoder maps each scalar parameter
// (tagged with its one-hot dimension id) to a feature vector; the relaxed
// graph sample mixes per-dimension features into one feature vector per
// factor; an action encoder produces a feature vector broadcast to all
// factors; a decoder maps each factor's summed features to a non-negative
// difference prediction through a softplus head.
//
// Edge probabilities are sigmoids of unconstrained logits. Training samples
// the graph from the binary-concrete relaxation sigmoid((L + noise) / T)
// with logistic noise, keeping everything differentiable; deterministic
// evaluation uses the expected graph sigmoid(L).

#ifndef SIMCAL_CAUSAL_MODEL_HPP_
#define SIMCAL_CAUSAL_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "simcal/graph.hpp"
#include "simcal/mat.hpp"
#include "simcal/nn.hpp"
#include "simcal/rng.hpp"

namespace simcal::causal {

struct CausalGraphParams {
  Mat logits;  // n_params x k
  double temperature = 1.0;

  int n_params() const { return logits.rows; }
  int k() const { return logits.cols; }
};

// Logits start at +6 so every edge probability is ~0.9975: effectively a
// fully connected graph while staying strictly inside (0, 1).
CausalGraphParams init_graph_params(int n_params, int k);

struct GraphSample {
  Mat g;      // relaxed edge activations in [0, 1]
  Mat noise;  // the logistic draws used
};

// Logistic noise is clamped to +/- kNoiseClamp; beyond that the relaxation
// is saturated anyway and bounded noise keeps extreme logits extreme.
constexpr double kNoiseClamp = 6.0;

GraphSample sample_graph(const CausalGraphParams& params, uint64_t seed);
Mat expected_graph(const CausalGraphParams& params);

struct ModelArch {
  int feature_dim = 32;
  std::vector<int> encoder_hidden{64};
  std::vector<int> decoder_hidden{256, 256};
  std::vector<int> action_hidden{64};
  nn::Activation activation = nn::Activation::kTanh;
};

struct CausalModel {
  int n_params = 0;
  int k = 0;
  int action_dim = 0;
  ModelArch arch;
  // Applied per scalar dimension with a one-hot dimension tag appended:
  // (1 + n_params) -> encoder_hidden -> feature_dim, weights shared across
  // dimensions.
  nn::ModelWeights encoder;
  nn::ModelWeights action_enc;  // action_dim -> hidden -> feature_dim
  nn::ModelWeights decoder;     // feature_dim -> hidden -> k
  CausalGraphParams graph;
};

CausalModel make_causal_model(int n_params, int k, int action_dim,
                              const ModelArch& arch, uint64_t seed,
                              CausalGraphParams graph);

struct DifferenceDataset {
  int n_params = 0;
  int action_dim = 0;
  int k = 0;
  int rows = 0;
  std::vector<double> eps;      // rows x n_params, normalized to [0, 1]
  std::vector<double> actions;  // rows x action_dim
  std::vector<double> d;        // rows x k, non-negative

  void add_row(const std::vector<double>& eps_norm,
               const std::vector<double>& action,
               const std::vector<double>& diff);
};

struct TrainingConfig {
  double sparse_weight = 0.003;
  double sw_discount = 0.5;
  double p_norm = 1.0;
  int epochs = 4000;
  int batch = 64;
  double learning_rate = 0.001;
  double temperature = 1.0;
  // Dense-ablation switch: keep the graph logits fixed during training.
  bool freeze_graph = false;

  void validate() const;
};

// --- graph building ---------------------------------------------------------

// Node handles produced by the shared network builder.
struct ModelNodes {
  ad::NodeRef pred;                    // batch x k, softplus applied
  ad::NodeRef psi;                     // n x k, sigmoid of logits (sampled mode)
  ad::NodeRef sampled_g;               // n x k (sampled mode only)
  ad::NodeRef logits;                  // sampled mode only
  ad::NodeRef enc_w0, enc_b;
  std::vector<ad::NodeRef> enc_tags;   // one row view per dimension
  nn::MlpNodes enc_tail;               // shared deeper encoder layers
  nn::MlpNodes act_nodes, dec_nodes;
};

// Builds the network into `g`. eps_cols holds one (batch x 1) node per
// parameter dimension. When g_const is non-null the graph transform is that
// fixed matrix; otherwise it is sampled through the binary-concrete
// relaxation with `noise` (a n x k node of logistic draws), differentiably
// in the logits.
ModelNodes build_causal_net(ad::CompGraph& g, const CausalModel& model,
                            const std::vector<ad::NodeRef>& eps_cols,
                            ad::NodeRef action_in, const Mat* g_const,
                            ad::NodeRef noise);

// Eq-style objective: mean over the batch of the squared L2 prediction error
// plus lambda_eff * sum (psi ^ p). `neg_target` is a (batch x k) node holding
// the negated observed differences.
ad::NodeRef build_loss(ad::CompGraph& g, const ModelNodes& nodes,
                       ad::NodeRef neg_target, double lambda_eff, double p_norm,
                       int batch, int n_params, int k);

// Single-sample prediction with a fixed graph transform; records everything
// in `g` so gradients (including d pred / d eps) are available.
ad::NodeRef predict_difference(const CausalModel& model, const Mat& g_mat,
                               const std::vector<double>& eps_norm,
                               const std::vector<double>& action,
                               ad::CompGraph& g);

// One-shot loss over a batch of dataset rows with a freshly sampled graph.
ad::NodeRef compute_loss(const CausalModel& model, const DifferenceDataset& ds,
                         const std::vector<int>& rows_idx, double lambda_eff,
                         double p_norm, uint64_t seed, ad::CompGraph& g);

struct TrainResult {
  CausalModel model;
  std::vector<double> epoch_loss;
};

// Fresh model weights, graph logits continued from `start`. Minibatch Adam
// with a fresh graph sample per minibatch. Deterministic per seed.
TrainResult train(const DifferenceDataset& ds, const TrainingConfig& cfg,
                  const CausalGraphParams& start, const ModelArch& arch,
                  uint64_t seed);

nlohmann::json model_to_json(const CausalModel& m);
CausalModel model_from_json(const nlohmann::json& j);

}  // namespace simcal::causal

#endif  // SIMCAL_CAUSAL_MODEL_HPP_
