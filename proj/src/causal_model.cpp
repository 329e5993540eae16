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

#include "simcal/causal_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <nlohmann/json.hpp>

#include "simcal/error.hpp"
#include "simcal/kernels.hpp"

namespace simcal::causal {

CausalGraphParams init_graph_params(int n_params, int k) {
  if (n_params <= 0 || k <= 0) {
    throw ConfigError("init_graph_params: dimensions must be positive, got " +
                      std::to_string(n_params) + "x" + std::to_string(k));
  }
  CausalGraphParams p;
  p.logits = Mat(n_params, k, 6.0);
  p.temperature = 1.0;
  return p;
}

GraphSample sample_graph(const CausalGraphParams& params, uint64_t seed) {
  if (params.temperature <= 0.0) {
    throw ContractError("sample_graph: temperature must be positive");
  }
  GraphSample s;
  s.noise = Mat(params.logits.rows, params.logits.cols);
  s.g = Mat(params.logits.rows, params.logits.cols);
  Rng rng(derive_seed(seed, "graph-noise"));
  for (int i = 0; i < s.noise.size(); ++i) {
    s.noise.data[i] = std::clamp(rng.logistic(), -kNoiseClamp, kNoiseClamp);
  }
  std::vector<double> arg(s.g.size());
  for (int i = 0; i < s.g.size(); ++i) {
    arg[i] = (params.logits.data[i] + s.noise.data[i]) / params.temperature;
  }
  kern::active().sigmoid_v(arg.data(), s.g.ptr(), arg.size());
  return s;
}

Mat expected_graph(const CausalGraphParams& params) {
  Mat g(params.logits.rows, params.logits.cols);
  kern::active().sigmoid_v(params.logits.ptr(), g.ptr(), g.size());
  return g;
}

void DifferenceDataset::add_row(const std::vector<double>& eps_norm,
                                const std::vector<double>& action,
                                const std::vector<double>& diff) {
  if (rows == 0 && n_params == 0) {
    n_params = static_cast<int>(eps_norm.size());
    action_dim = static_cast<int>(action.size());
    k = static_cast<int>(diff.size());
  }
  if (static_cast<int>(eps_norm.size()) != n_params ||
      static_cast<int>(action.size()) != action_dim ||
      static_cast<int>(diff.size()) != k) {
    throw ShapeError("dataset row widths do not match the first row");
  }
  eps.insert(eps.end(), eps_norm.begin(), eps_norm.end());
  actions.insert(actions.end(), action.begin(), action.end());
  d.insert(d.end(), diff.begin(), diff.end());
  rows += 1;
}

void TrainingConfig::validate() const {
  if (sparse_weight < 0.0) throw ConfigError("sparse_weight must be >= 0");
  if (!(sw_discount > 0.0 && sw_discount <= 1.0)) {
    throw ConfigError("sw_discount must be in (0, 1]");
  }
  if (p_norm <= 0.0) throw ConfigError("p_norm must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch <= 0) throw ConfigError("batch size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
}

CausalModel make_causal_model(int n_params, int k, int action_dim,
                              const ModelArch& arch, uint64_t seed,
                              CausalGraphParams graph) {
  if (graph.logits.rows != n_params || graph.logits.cols != k) {
    throw ShapeError("make_causal_model: graph params are " +
                     std::to_string(graph.logits.rows) + "x" +
                     std::to_string(graph.logits.cols) + ", expected " +
                     std::to_string(n_params) + "x" + std::to_string(k));
  }
  CausalModel m;
  m.n_params = n_params;
  m.k = k;
  m.action_dim = action_dim;
  m.arch = arch;
  std::vector<int> enc_sizes{1 + n_params};
  enc_sizes.insert(enc_sizes.end(), arch.encoder_hidden.begin(),
                   arch.encoder_hidden.end());
  enc_sizes.push_back(arch.feature_dim);
  m.encoder = nn::build_mlp(enc_sizes, arch.activation,
                            derive_seed(seed, "encoder"));
  std::vector<int> act_sizes{action_dim};
  act_sizes.insert(act_sizes.end(), arch.action_hidden.begin(),
                   arch.action_hidden.end());
  act_sizes.push_back(arch.feature_dim);
  m.action_enc = nn::build_mlp(act_sizes, arch.activation,
                               derive_seed(seed, "action-encoder"));
  std::vector<int> dec_sizes{arch.feature_dim};
  dec_sizes.insert(dec_sizes.end(), arch.decoder_hidden.begin(),
                   arch.decoder_hidden.end());
  dec_sizes.push_back(k);
  m.decoder = nn::build_mlp(dec_sizes, arch.activation,
                            derive_seed(seed, "decoder"));
  m.graph = std::move(graph);
  return m;
}

ModelNodes build_causal_net(ad::CompGraph& g, const CausalModel& model,
                            const std::vector<ad::NodeRef>& eps_cols,
                            ad::NodeRef action_in, const Mat* g_const,
                            ad::NodeRef noise) {
  const int n = model.n_params;
  const int k = model.k;
  const int dz = model.arch.feature_dim;
  if (static_cast<int>(eps_cols.size()) != n) {
    throw ShapeError("build_causal_net: expected " + std::to_string(n) +
                     " parameter columns, got " + std::to_string(eps_cols.size()));
  }
  if (g_const != nullptr && (g_const->rows != n || g_const->cols != k)) {
    throw ShapeError("build_causal_net: graph matrix is " +
                     std::to_string(g_const->rows) + "x" +
                     std::to_string(g_const->cols) + ", expected " +
                     std::to_string(n) + "x" + std::to_string(k));
  }

  ModelNodes out;
  // First encoder layer over [eps_r ; one-hot(r)]: the one-hot block folds
  // into a per-dimension bias row, so no dense 1+n wide matmul is needed.
  const Mat& enc_w = model.encoder.layers[0].w;  // (1 + n) x h0
  const Mat& enc_b = model.encoder.layers[0].b;
  const int h0 = enc_w.cols;
  out.enc_w0 = g.param(enc_w.row_ptr(0), 1, h0);
  out.enc_b = g.param(enc_b.ptr(), 1, h0);
  out.enc_tags.reserve(n);
  for (int r = 0; r < n; ++r) {
    out.enc_tags.push_back(g.param(enc_w.row_ptr(1 + r), 1, h0));
  }
  // Remaining encoder layers are plain dense layers shared across dimensions.
  nn::MlpNodes enc_tail;
  for (size_t i = 1; i < model.encoder.layers.size(); ++i) {
    enc_tail.w.push_back(g.param(model.encoder.layers[i].w.ptr(),
                                 model.encoder.layers[i].w.rows,
                                 model.encoder.layers[i].w.cols));
    enc_tail.b.push_back(g.param(model.encoder.layers[i].b.ptr(), 1,
                                 model.encoder.layers[i].b.cols));
  }

  const bool tanh_act = (model.arch.activation == nn::Activation::kTanh);
  auto activate = [&](ad::NodeRef x) {
    switch (model.arch.activation) {
      case nn::Activation::kIdentity: return x;
      case nn::Activation::kTanh: return g.tanh(x);
      case nn::Activation::kRelu: return g.relu(x);
      case nn::Activation::kSigmoid: return g.sigmoid(x);
    }
    return x;
  };
  auto enc_layer = [&](ad::NodeRef x, ad::NodeRef w, ad::NodeRef b) {
    return tanh_act ? g.affine_tanh(x, w, b) : activate(g.affine(x, w, b));
  };

  // Per-dimension features through the shared encoder.
  std::vector<ad::NodeRef> z;
  z.reserve(n);
  for (int r = 0; r < n; ++r) {
    const ad::NodeRef bias_r = g.add(out.enc_tags[r], out.enc_b);
    ad::NodeRef h = enc_layer(eps_cols[r], out.enc_w0, bias_r);
    for (size_t i = 0; i < enc_tail.w.size(); ++i) {
      h = enc_layer(h, enc_tail.w[i], enc_tail.b[i]);
    }
    z.push_back(h);
  }
  out.enc_tail = enc_tail;

  // Graph transform: a constant matrix, or the binary-concrete relaxation
  // sigmoid((logits + noise) / T).
  ad::NodeRef g_node;
  if (g_const != nullptr) {
    g_node = g.constant(*g_const);
  } else {
    if (!noise.valid()) {
      throw ContractError("build_causal_net: sampled mode needs a noise node");
    }
    out.logits = g.param(model.graph.logits.ptr(), n, k);
    const ad::NodeRef shifted = g.add(out.logits, noise);
    const ad::NodeRef scaled =
        g.mul(shifted, g.scalar_const(1.0 / model.graph.temperature));
    out.sampled_g = g.sigmoid(scaled);
    out.psi = g.sigmoid(out.logits);
    g_node = out.sampled_g;
  }

  // Action features, broadcast identically to every factor column.
  out.act_nodes = nn::bind_mlp(g, model.action_enc);
  const ad::NodeRef act_out = nn::apply_mlp(g, out.act_nodes, model.action_enc,
                                            action_in, /*final_activation=*/true);

  out.dec_nodes = nn::bind_mlp(g, model.decoder);
  const int batch = g.rows(action_in);
  ad::NodeRef pred_raw;
  for (int c = 0; c < k; ++c) {
    const ad::NodeRef mix = g.graph_mix(g_node, z, c);
    const ad::NodeRef dec_in = g.add(mix, act_out);
    const ad::NodeRef dec_out =
        nn::apply_mlp(g, out.dec_nodes, model.decoder, dec_in);
    Mat colmask(batch, k);
    for (int b = 0; b < batch; ++b) colmask(b, c) = 1.0;
    const ad::NodeRef picked = g.mul(dec_out, g.constant(colmask));
    pred_raw = pred_raw.valid() ? g.add(pred_raw, picked) : picked;
  }
  (void)dz;
  out.pred = g.softplus(pred_raw);
  return out;
}

ad::NodeRef build_loss(ad::CompGraph& g, const ModelNodes& nodes,
                       ad::NodeRef neg_target, double lambda_eff, double p_norm,
                       int batch, int n_params, int k) {
  (void)batch;
  const ad::NodeRef err = g.add(nodes.pred, neg_target);
  const ad::NodeRef se = g.square(err);
  // mean over all entries times k == mean over rows of the squared L2 norm.
  ad::NodeRef loss = g.mul(g.mean(se), g.scalar_const(static_cast<double>(k)));
  if (lambda_eff > 0.0) {
    if (!nodes.psi.valid()) {
      throw ContractError("build_loss: sparsity term needs the sampled-graph mode");
    }
    ad::NodeRef pen;
    if (p_norm == 1.0) {
      pen = g.abs(nodes.psi);
    } else {
      pen = g.exp(g.mul(g.log(nodes.psi), g.scalar_const(p_norm)));
    }
    const double scale = lambda_eff * static_cast<double>(n_params) * k;
    loss = g.add(loss, g.mul(g.mean(pen), g.scalar_const(scale)));
  }
  return loss;
}

ad::NodeRef predict_difference(const CausalModel& model, const Mat& g_mat,
                               const std::vector<double>& eps_norm,
                               const std::vector<double>& action,
                               ad::CompGraph& g) {
  if (static_cast<int>(eps_norm.size()) != model.n_params) {
    throw ShapeError("predict_difference: eps width " +
                     std::to_string(eps_norm.size()) + ", expected " +
                     std::to_string(model.n_params));
  }
  if (static_cast<int>(action.size()) != model.action_dim) {
    throw ShapeError("predict_difference: action width " +
                     std::to_string(action.size()) + ", expected " +
                     std::to_string(model.action_dim));
  }
  std::vector<ad::NodeRef> eps_cols;
  eps_cols.reserve(model.n_params);
  for (int r = 0; r < model.n_params; ++r) {
    Mat col(1, 1);
    col(0, 0) = eps_norm[r];
    eps_cols.push_back(g.constant(col));
  }
  Mat act_row(1, model.action_dim);
  for (int i = 0; i < model.action_dim; ++i) act_row(0, i) = action[i];
  const ad::NodeRef action_in = g.constant(act_row);
  const ModelNodes nodes =
      build_causal_net(g, model, eps_cols, action_in, &g_mat, ad::NodeRef{});
  return nodes.pred;
}

ad::NodeRef compute_loss(const CausalModel& model, const DifferenceDataset& ds,
                         const std::vector<int>& rows_idx, double lambda_eff,
                         double p_norm, uint64_t seed, ad::CompGraph& g) {
  if (rows_idx.empty()) throw ContractError("compute_loss: empty batch");
  if (lambda_eff < 0.0) throw ContractError("compute_loss: lambda_eff < 0");
  const int batch = static_cast<int>(rows_idx.size());
  const int n = model.n_params;

  std::vector<ad::NodeRef> eps_cols;
  eps_cols.reserve(n);
  for (int r = 0; r < n; ++r) {
    Mat col(batch, 1);
    for (int b = 0; b < batch; ++b) {
      col(b, 0) = ds.eps[static_cast<size_t>(rows_idx[b]) * n + r];
    }
    eps_cols.push_back(g.constant(col));
  }
  Mat act(batch, ds.action_dim);
  Mat neg_d(batch, ds.k);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < ds.action_dim; ++i) {
      act(b, i) = ds.actions[static_cast<size_t>(rows_idx[b]) * ds.action_dim + i];
    }
    for (int i = 0; i < ds.k; ++i) {
      neg_d(b, i) = -ds.d[static_cast<size_t>(rows_idx[b]) * ds.k + i];
    }
  }
  const ad::NodeRef action_in = g.constant(act);
  const GraphSample sample = sample_graph(model.graph, seed);
  const ad::NodeRef noise = g.constant(sample.noise);
  const ModelNodes nodes =
      build_causal_net(g, model, eps_cols, action_in, nullptr, noise);
  return build_loss(g, nodes, g.constant(neg_d), lambda_eff, p_norm, batch, n,
                    model.k);
}

namespace {

// Static training graph for one batch size; inputs are rebound in place
// between minibatches.
class TrainerGraph {
 public:
  TrainerGraph(const CausalModel& model, int batch, double lambda_eff,
               double p_norm)
      : batch_(batch),
        n_(model.n_params),
        k_(model.k),
        eps_cols_(model.n_params, batch),
        actions_(batch, model.action_dim),
        neg_d_(batch, model.k),
        noise_(model.n_params, model.k) {
    std::vector<ad::NodeRef> eps_nodes;
    eps_nodes.reserve(n_);
    for (int r = 0; r < n_; ++r) {
      ad::NodeRef in = g_.input(batch, 1);
      g_.bind(in, eps_cols_.row_ptr(r));
      eps_nodes.push_back(in);
    }
    action_in_ = g_.input(batch, model.action_dim);
    g_.bind(action_in_, actions_.ptr());
    noise_in_ = g_.input(n_, k_);
    g_.bind(noise_in_, noise_.ptr());
    nodes_ = build_causal_net(g_, model, eps_nodes, action_in_, nullptr,
                              noise_in_);
    neg_target_ = g_.input(batch, k_);
    g_.bind(neg_target_, neg_d_.ptr());
    loss_ = build_loss(g_, nodes_, neg_target_, lambda_eff, p_norm, batch, n_,
                       k_);
  }

  void stage(const DifferenceDataset& ds, const int* rows_idx, Rng& noise_rng) {
    for (int b = 0; b < batch_; ++b) {
      const size_t row = static_cast<size_t>(rows_idx[b]);
      for (int r = 0; r < n_; ++r) {
        eps_cols_(r, b) = ds.eps[row * n_ + r];
      }
      std::memcpy(actions_.row_ptr(b), &ds.actions[row * ds.action_dim],
                  sizeof(double) * ds.action_dim);
      for (int i = 0; i < k_; ++i) neg_d_(b, i) = -ds.d[row * k_ + i];
    }
    for (int i = 0; i < noise_.size(); ++i) {
      noise_.data[i] = std::clamp(noise_rng.logistic(), -kNoiseClamp, kNoiseClamp);
    }
  }

  double run() {
    g_.forward();
    const double loss = g_.value_scalar(loss_);
    g_.backward(loss_);
    return loss;
  }

  // Gradient tensors in the same order as model_tensors().
  void collect_grads(const CausalModel& model, bool freeze_graph,
                     std::vector<Mat>& out) const {
    out.clear();
    const int h0 = model.encoder.layers[0].w.cols;
    Mat enc_w(1 + n_, h0);
    std::memcpy(enc_w.row_ptr(0), g_.grad(nodes_.enc_w0).data(),
                sizeof(double) * h0);
    for (int r = 0; r < n_; ++r) {
      std::memcpy(enc_w.row_ptr(1 + r), g_.grad(nodes_.enc_tags[r]).data(),
                  sizeof(double) * h0);
    }
    out.push_back(std::move(enc_w));
    out.push_back(g_.grad_mat(nodes_.enc_b));
    for (size_t i = 0; i < nodes_.enc_tail.w.size(); ++i) {
      out.push_back(g_.grad_mat(nodes_.enc_tail.w[i]));
      out.push_back(g_.grad_mat(nodes_.enc_tail.b[i]));
    }
    for (size_t i = 0; i < nodes_.act_nodes.w.size(); ++i) {
      out.push_back(g_.grad_mat(nodes_.act_nodes.w[i]));
      out.push_back(g_.grad_mat(nodes_.act_nodes.b[i]));
    }
    for (size_t i = 0; i < nodes_.dec_nodes.w.size(); ++i) {
      out.push_back(g_.grad_mat(nodes_.dec_nodes.w[i]));
      out.push_back(g_.grad_mat(nodes_.dec_nodes.b[i]));
    }
    if (!freeze_graph) out.push_back(g_.grad_mat(nodes_.logits));
  }

 private:
  int batch_, n_, k_;
  ad::CompGraph g_;
  Mat eps_cols_;  // n x batch: row r holds the batch values of dimension r
  Mat actions_;
  Mat neg_d_;
  Mat noise_;
  ad::NodeRef action_in_, noise_in_, neg_target_, loss_;
  ModelNodes nodes_;
};

std::vector<Mat*> model_tensors(CausalModel& m, Mat* logits) {
  std::vector<Mat*> t;
  for (auto& l : m.encoder.layers) {
    t.push_back(&l.w);
    t.push_back(&l.b);
  }
  for (auto& l : m.action_enc.layers) {
    t.push_back(&l.w);
    t.push_back(&l.b);
  }
  for (auto& l : m.decoder.layers) {
    t.push_back(&l.w);
    t.push_back(&l.b);
  }
  if (logits != nullptr) t.push_back(logits);
  return t;
}

std::vector<std::string> tensor_names(const CausalModel& m, bool freeze_graph) {
  std::vector<std::string> names;
  for (size_t i = 0; i < m.encoder.layers.size(); ++i) {
    names.push_back("encoder.layer" + std::to_string(i) + ".w");
    names.push_back("encoder.layer" + std::to_string(i) + ".b");
  }
  for (size_t i = 0; i < m.action_enc.layers.size(); ++i) {
    names.push_back("action_enc.layer" + std::to_string(i) + ".w");
    names.push_back("action_enc.layer" + std::to_string(i) + ".b");
  }
  for (size_t i = 0; i < m.decoder.layers.size(); ++i) {
    names.push_back("decoder.layer" + std::to_string(i) + ".w");
    names.push_back("decoder.layer" + std::to_string(i) + ".b");
  }
  if (!freeze_graph) names.push_back("graph.logits");
  return names;
}

}  // namespace

TrainResult train(const DifferenceDataset& ds, const TrainingConfig& cfg,
                  const CausalGraphParams& start, const ModelArch& arch,
                  uint64_t seed) {
  cfg.validate();
  if (ds.rows <= 0) throw ContractError("train: dataset is empty");
  if (start.logits.rows != ds.n_params) {
    throw ShapeError("train: graph params rows " +
                     std::to_string(start.logits.rows) + " vs dataset " +
                     std::to_string(ds.n_params));
  }
  if (start.logits.cols != ds.k) {
    throw ShapeError("train: graph params cols mismatch");
  }
  for (double v : ds.d) {
    if (v < 0.0) throw ContractError("train: negative trajectory difference");
  }

  CausalGraphParams graph = start;
  graph.temperature = cfg.temperature;
  CausalModel model = make_causal_model(ds.n_params, ds.k, ds.action_dim, arch,
                                        derive_seed(seed, "train-init"),
                                        std::move(graph));

  std::vector<Mat*> params =
      model_tensors(model, cfg.freeze_graph ? nullptr : &model.graph.logits);
  std::vector<const Mat*> cparams(params.begin(), params.end());
  const std::vector<std::string> names = tensor_names(model, cfg.freeze_graph);
  nn::AdamState adam = nn::make_adam_state(cparams);

  const int eff_batch = std::min(cfg.batch, ds.rows);
  const int full_batches = ds.rows / eff_batch;
  const int remainder = ds.rows % eff_batch;
  TrainerGraph full_graph(model, eff_batch, cfg.sparse_weight, cfg.p_norm);
  std::unique_ptr<TrainerGraph> rem_graph;
  if (remainder > 0) {
    rem_graph = std::make_unique<TrainerGraph>(model, remainder,
                                               cfg.sparse_weight, cfg.p_norm);
  }

  Rng noise_rng(derive_seed(seed, "train-noise"));
  std::vector<int> perm(ds.rows);
  for (int i = 0; i < ds.rows; ++i) perm[i] = i;
  std::vector<Mat> grads;
  std::vector<double> epoch_loss;
  epoch_loss.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, "train-shuffle", epoch));
    for (int i = ds.rows - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
      std::swap(perm[i], perm[j]);
    }
    double loss_sum = 0.0;
    int batches = 0;
    auto run_one = [&](TrainerGraph& tg, const int* rows_idx) {
      tg.stage(ds, rows_idx, noise_rng);
      const double loss = tg.run();
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      tg.collect_grads(model, cfg.freeze_graph, grads);
      std::vector<const Mat*> gptrs;
      gptrs.reserve(grads.size());
      for (const Mat& m : grads) gptrs.push_back(&m);
      nn::adam_step_tensors(params, gptrs, names, adam, cfg.learning_rate);
      loss_sum += loss;
      ++batches;
    };
    for (int b = 0; b < full_batches; ++b) {
      run_one(full_graph, perm.data() + static_cast<size_t>(b) * eff_batch);
    }
    if (rem_graph) {
      run_one(*rem_graph,
              perm.data() + static_cast<size_t>(full_batches) * eff_batch);
    }
    epoch_loss.push_back(loss_sum / batches);
  }
  return TrainResult{std::move(model), std::move(epoch_loss)};
}

nlohmann::json model_to_json(const CausalModel& m) {
  nlohmann::json j;
  j["n_params"] = m.n_params;
  j["k"] = m.k;
  j["action_dim"] = m.action_dim;
  j["arch"] = {{"feature_dim", m.arch.feature_dim},
               {"encoder_hidden", m.arch.encoder_hidden},
               {"decoder_hidden", m.arch.decoder_hidden},
               {"action_hidden", m.arch.action_hidden},
               {"activation", nn::activation_to_string(m.arch.activation)}};
  j["encoder"] = nn::weights_to_json(m.encoder);
  j["action_encoder"] = nn::weights_to_json(m.action_enc);
  j["decoder"] = nn::weights_to_json(m.decoder);
  nlohmann::json logits = nlohmann::json::array();
  for (int r = 0; r < m.graph.logits.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.graph.logits.cols; ++c) {
      row.push_back(m.graph.logits(r, c));
    }
    logits.push_back(std::move(row));
  }
  j["psi_logits"] = std::move(logits);
  j["temperature"] = m.graph.temperature;
  return j;
}

CausalModel model_from_json(const nlohmann::json& j) {
  CausalModel m;
  m.n_params = j.at("n_params").get<int>();
  m.k = j.at("k").get<int>();
  m.action_dim = j.at("action_dim").get<int>();
  const auto& ja = j.at("arch");
  m.arch.feature_dim = ja.at("feature_dim").get<int>();
  m.arch.encoder_hidden = ja.at("encoder_hidden").get<std::vector<int>>();
  m.arch.decoder_hidden = ja.at("decoder_hidden").get<std::vector<int>>();
  m.arch.action_hidden = ja.at("action_hidden").get<std::vector<int>>();
  m.arch.activation =
      nn::activation_from_string(ja.at("activation").get<std::string>());
  m.encoder = nn::weights_from_json(j.at("encoder"));
  m.action_enc = nn::weights_from_json(j.at("action_encoder"));
  m.decoder = nn::weights_from_json(j.at("decoder"));
  const auto& jl = j.at("psi_logits");
  m.graph.logits = Mat(m.n_params, m.k);
  if (static_cast<int>(jl.size()) != m.n_params) {
    throw ParseError("model: psi_logits row count mismatch");
  }
  for (int r = 0; r < m.n_params; ++r) {
    for (int c = 0; c < m.k; ++c) {
      m.graph.logits(r, c) = jl.at(r).at(c).get<double>();
    }
  }
  m.graph.temperature = j.at("temperature").get<double>();
  return m;
}

}  // namespace simcal::causal
