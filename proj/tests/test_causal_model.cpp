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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "simcal/causal_model.hpp"
#include "simcal/error.hpp"
#include "simcal/rng.hpp"

using namespace simcal;
using causal::CausalGraphParams;
using causal::CausalModel;
using causal::DifferenceDataset;
using causal::ModelArch;
using causal::TrainingConfig;

namespace {

// small architecture keeps model tests quick; the defaults are exercised by
// the acceptance suite
ModelArch tiny_arch() {
  ModelArch a;
  a.feature_dim = 8;
  a.encoder_hidden = {16};
  a.decoder_hidden = {32, 32};
  a.action_hidden = {8};
  return a;
}

CausalModel tiny_model(int n, int k, int adim, uint64_t seed) {
  return causal::make_causal_model(n, k, adim, tiny_arch(), seed,
                                   causal::init_graph_params(n, k));
}

std::vector<double> predict(const CausalModel& m, const Mat& g_mat,
                            const std::vector<double>& eps,
                            const std::vector<double>& action) {
  ad::CompGraph g;
  const ad::NodeRef out = causal::predict_difference(m, g_mat, eps, action, g);
  g.forward();
  const double* v = g.value_ptr(out);
  return std::vector<double>(v, v + m.k);
}

DifferenceDataset random_dataset(int n, int k, int adim, int rows, uint64_t seed) {
  Rng rng(seed);
  DifferenceDataset ds;
  for (int r = 0; r < rows; ++r) {
    std::vector<double> eps(n), act(adim), d(k);
    for (auto& v : eps) v = rng.uniform01();
    for (auto& v : act) v = rng.uniform(-1.0, 1.0);
    for (auto& v : d) v = rng.uniform(0.0, 2.0);
    ds.add_row(eps, act, d);
  }
  return ds;
}

}  // namespace

TEST_CASE("init_graph_params: effectively fully connected") {
  const CausalGraphParams p = causal::init_graph_params(64, 2);
  CHECK(p.logits.rows == 64);
  CHECK(p.logits.cols == 2);
  const Mat psi = causal::expected_graph(p);
  for (double v : psi.data) {
    CHECK(v > 0.99);
    CHECK(v < 1.0);
  }
  const CausalGraphParams single = causal::init_graph_params(1, 1);
  CHECK(causal::expected_graph(single).data[0] > 0.99);
  // no randomness involved
  CHECK(causal::init_graph_params(8, 2).logits.data ==
        causal::init_graph_params(8, 2).logits.data);
  CHECK_THROWS_AS(causal::init_graph_params(0, 2), ConfigError);
  CHECK_THROWS_AS(causal::init_graph_params(4, -1), ConfigError);
}

TEST_CASE("sample_graph: saturated logits stay saturated under any draw") {
  CausalGraphParams p = causal::init_graph_params(3, 2);
  p.logits.fill(20.0);
  for (uint64_t seed = 0; seed < 500; ++seed) {
    const causal::GraphSample s = causal::sample_graph(p, seed);
    for (double v : s.g.data) CHECK(v > 0.999);
  }
}

TEST_CASE("sample_graph: symmetric at psi = 0.5 (Monte Carlo)") {
  CausalGraphParams p = causal::init_graph_params(1, 1);
  p.logits.fill(0.0);
  int above = 0;
  const int trials = 100000;
  for (int seed = 0; seed < trials; ++seed) {
    const causal::GraphSample s = causal::sample_graph(p, seed);
    CHECK(s.g.data[0] >= 0.0);
    CHECK(s.g.data[0] <= 1.0);
    if (s.g.data[0] >= 0.5) ++above;
  }
  const double frac = static_cast<double>(above) / trials;
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
}

TEST_CASE("sample_graph: deterministic per seed, noise recorded and bounded") {
  CausalGraphParams p = causal::init_graph_params(5, 2);
  const causal::GraphSample a = causal::sample_graph(p, 123);
  const causal::GraphSample b = causal::sample_graph(p, 123);
  CHECK(a.g.data == b.g.data);
  CHECK(a.noise.data == b.noise.data);
  for (int i = 0; i < a.noise.size(); ++i) {
    CHECK(std::fabs(a.noise.data[i]) <= causal::kNoiseClamp);
    // the sample is exactly the relaxation of (logit + noise)
    const double expect = 1.0 / (1.0 + std::exp(-(p.logits.data[i] + a.noise.data[i])));
    CHECK(a.g.data[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      causal::sample_graph(CausalGraphParams{Mat(2, 2), 0.0}, 1),
      ContractError);
}

TEST_CASE("expected_graph: sigmoid table") {
  CausalGraphParams p = causal::init_graph_params(3, 1);
  p.logits(0, 0) = -6.0;
  p.logits(1, 0) = 0.0;
  p.logits(2, 0) = 6.0;
  const Mat psi = causal::expected_graph(p);
  CHECK(std::fabs(psi(0, 0) - 0.00247) < 1e-5);
  CHECK(psi(1, 0) == 0.5);
  CHECK(std::fabs(psi(2, 0) - 0.99753) < 1e-5);
}

TEST_CASE("predict_difference: zero graph blocks every parameter") {
  const CausalModel m = tiny_model(6, 2, 3, 11);
  const Mat zero(6, 2, 0.0);
  Rng rng(3);
  const std::vector<double> action{0.1, -0.2, 0.4};
  std::vector<double> eps1(6), eps2(6);
  for (int t = 0; t < 10; ++t) {
    for (int i = 0; i < 6; ++i) {
      eps1[i] = rng.uniform01();
      eps2[i] = rng.uniform01();
    }
    const auto p1 = predict(m, zero, eps1, action);
    const auto p2 = predict(m, zero, eps2, action);
    CHECK(p1 == p2);
  }
}

TEST_CASE("predict_difference: a zeroed row masks exactly that parameter") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const CausalModel m = tiny_model(6, 2, 2, 100 + trial);
    Mat g_mat(6, 2);
    for (double& v : g_mat.data) v = rng.uniform01();
    const int row = trial % 6;
    g_mat(row, 0) = 0.0;
    g_mat(row, 1) = 0.0;
    std::vector<double> eps(6), action{0.3, 0.7};
    for (auto& v : eps) v = rng.uniform01();
    std::vector<double> eps_b = eps;
    eps_b[row] = rng.uniform01();
    const auto p1 = predict(m, g_mat, eps, action);
    const auto p2 = predict(m, g_mat, eps_b, action);
    CHECK(p1 == p2);  // bit-identical under the structural mask
    // and a live row is generically sensitive
    std::vector<double> eps_c = eps;
    const int live = (row + 1) % 6;
    eps_c[live] = eps[live] < 0.5 ? eps[live] + 0.3 : eps[live] - 0.3;
    const auto p3 = predict(m, g_mat, eps_c, action);
    CHECK(p1 != p3);
  }
}

TEST_CASE("predict_difference: near-one rows show finite-difference sensitivity") {
  const CausalModel m = tiny_model(5, 1, 2, 21);
  const Mat psi = causal::expected_graph(m.graph);  // all ~0.9975
  std::vector<double> eps{0.4, 0.5, 0.6, 0.3, 0.7};
  const std::vector<double> action{0.2, -0.1};
  const double h = 1e-4;
  double max_sens = 0.0;
  for (int r = 0; r < 5; ++r) {
    std::vector<double> ep = eps, em = eps;
    ep[r] += h;
    em[r] -= h;
    const double fd =
        (predict(m, psi, ep, action)[0] - predict(m, psi, em, action)[0]) / (2 * h);
    max_sens = std::max(max_sens, std::fabs(fd));
  }
  CHECK(max_sens > 1e-6);
}

TEST_CASE("predict_difference: outputs are non-negative (softplus head)") {
  Rng rng(9);
  const CausalModel m = tiny_model(8, 2, 3, 33);
  const Mat psi = causal::expected_graph(m.graph);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> eps(8), action(3);
    for (auto& v : eps) v = rng.uniform01();
    for (auto& v : action) v = rng.uniform(-2.0, 2.0);
    for (double v : predict(m, psi, eps, action)) CHECK(v >= 0.0);
  }
}

TEST_CASE("predict_difference: shape errors") {
  const CausalModel m = tiny_model(4, 2, 2, 3);
  ad::CompGraph g;
  const Mat psi = causal::expected_graph(m.graph);
  CHECK_THROWS_AS(
      causal::predict_difference(m, psi, {0.1, 0.2}, {0.1, 0.2}, g), ShapeError);
  CHECK_THROWS_AS(
      causal::predict_difference(m, psi, {0.1, 0.2, 0.3, 0.4}, {0.1}, g),
      ShapeError);
  const Mat bad(3, 2, 0.5);
  CHECK_THROWS_AS(
      causal::predict_difference(m, bad, {0.1, 0.2, 0.3, 0.4}, {0.1, 0.2}, g),
      ShapeError);
}

TEST_CASE("compute_loss: squared-error term matches per-row predictions") {
  const int n = 5, k = 2, adim = 2;
  const CausalModel m = tiny_model(n, k, adim, 77);
  const DifferenceDataset ds = random_dataset(n, k, adim, 8, 5);
  std::vector<int> idx{0, 1, 2, 3, 4, 5, 6, 7};
  const uint64_t seed = 99;

  ad::CompGraph g;
  const ad::NodeRef loss =
      causal::compute_loss(m, ds, idx, 0.0, 1.0, seed, g);
  g.forward();
  const double got = g.value_scalar(loss);

  // oracle: same sampled graph, per-row single predictions, plain arithmetic
  const causal::GraphSample sample = causal::sample_graph(m.graph, seed);
  double expect = 0.0;
  for (int r = 0; r < 8; ++r) {
    std::vector<double> eps(ds.eps.begin() + r * n, ds.eps.begin() + (r + 1) * n);
    std::vector<double> act(ds.actions.begin() + r * adim,
                            ds.actions.begin() + (r + 1) * adim);
    const auto pred = predict(m, sample.g, eps, act);
    for (int c = 0; c < k; ++c) {
      const double e = pred[c] - ds.d[r * k + c];
      expect += e * e;
    }
  }
  expect /= 8.0;
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("compute_loss: single row with unit errors gives exactly 2") {
  const int n = 4, k = 2;
  const CausalModel m = tiny_model(n, k, 2, 13);
  const uint64_t seed = 7;
  const causal::GraphSample sample = causal::sample_graph(m.graph, seed);
  const std::vector<double> eps{0.2, 0.4, 0.6, 0.8};
  const std::vector<double> act{0.5, -0.5};
  const auto pred = predict(m, sample.g, eps, act);

  DifferenceDataset ds;
  ds.add_row(eps, act, {pred[0] - 1.0, pred[1] - 1.0});
  ad::CompGraph g;
  const ad::NodeRef loss = causal::compute_loss(m, ds, {0}, 0.0, 1.0, seed, g);
  g.forward();
  CHECK(g.value_scalar(loss) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("compute_loss: sparsity term arithmetic at the all-ones limit") {
  const int n = 64, k = 2;
  CausalModel m = tiny_model(n, k, 2, 17);
  m.graph.logits.fill(60.0);  // psi -> 1
  const DifferenceDataset ds = random_dataset(n, k, 2, 4, 3);
  const std::vector<int> idx{0, 1, 2, 3};
  auto loss_at = [&](double lam) {
    ad::CompGraph g;
    const ad::NodeRef l = causal::compute_loss(m, ds, idx, lam, 1.0, 11, g);
    g.forward();
    return g.value_scalar(l);
  };
  const double sparsity = loss_at(0.003) - loss_at(0.0);
  CHECK(std::fabs(sparsity - 0.003 * 128.0) < 1e-6);
}

TEST_CASE("compute_loss: strictly increasing in each edge probability") {
  const int n = 6, k = 2;
  CausalModel m = tiny_model(n, k, 2, 19);
  Rng rng(23);
  for (double& v : m.graph.logits.data) v = rng.uniform(-2.0, 2.0);
  const DifferenceDataset ds = random_dataset(n, k, 2, 4, 29);
  const std::vector<int> idx{0, 1, 2, 3};
  auto sparsity_term = [&](double p_norm) {
    ad::CompGraph g1, g2;
    const ad::NodeRef l1 = causal::compute_loss(m, ds, idx, 0.01, p_norm, 31, g1);
    const ad::NodeRef l0 = causal::compute_loss(m, ds, idx, 0.0, p_norm, 31, g2);
    g1.forward();
    g2.forward();
    return g1.value_scalar(l1) - g2.value_scalar(l0);
  };
  for (double p_norm : {1.0, 2.0}) {
    const double before = sparsity_term(p_norm);
    for (int i = 0; i < m.graph.logits.size(); ++i) {
      const double saved = m.graph.logits.data[i];
      m.graph.logits.data[i] = saved + 0.5;
      CHECK(sparsity_term(p_norm) > before);
      m.graph.logits.data[i] = saved;
    }
  }
}

TEST_CASE("compute_loss: empty batch is a contract error") {
  const CausalModel m = tiny_model(4, 1, 2, 3);
  const DifferenceDataset ds = random_dataset(4, 1, 2, 4, 3);
  ad::CompGraph g;
  CHECK_THROWS_AS(causal::compute_loss(m, ds, {}, 0.0, 1.0, 1, g),
                  ContractError);
}

TEST_CASE("gradient flows to the graph logits and matches finite differences") {
  const int n = 5, k = 2;
  CausalModel m = tiny_model(n, k, 2, 41);
  Rng rng(43);
  for (double& v : m.graph.logits.data) v = rng.uniform(-1.0, 1.0);
  const DifferenceDataset ds = random_dataset(n, k, 2, 6, 47);
  const std::vector<int> idx{0, 1, 2, 3, 4, 5};
  const uint64_t seed = 53;

  // analytic gradient through the training-style graph
  ad::CompGraph g;
  std::vector<ad::NodeRef> eps_cols;
  for (int r = 0; r < n; ++r) {
    Mat col(6, 1);
    for (int b = 0; b < 6; ++b) col(b, 0) = ds.eps[b * n + r];
    eps_cols.push_back(g.constant(col));
  }
  Mat act(6, 2), neg(6, k);
  for (int b = 0; b < 6; ++b) {
    for (int i = 0; i < 2; ++i) act(b, i) = ds.actions[b * 2 + i];
    for (int i = 0; i < k; ++i) neg(b, i) = -ds.d[b * k + i];
  }
  const causal::GraphSample sample = causal::sample_graph(m.graph, seed);
  const causal::ModelNodes nodes = causal::build_causal_net(
      g, m, eps_cols, g.constant(act), nullptr, g.constant(sample.noise));
  const ad::NodeRef loss =
      causal::build_loss(g, nodes, g.constant(neg), 0.003, 1.0, 6, n, k);
  g.forward();
  g.backward(loss);
  const std::vector<double> analytic = g.grad(nodes.logits);

  // finite differences at the same fixed noise draws
  int nonzero = 0;
  for (int i = 0; i < m.graph.logits.size(); ++i) {
    const double h = 1e-5;
    const double saved = m.graph.logits.data[i];
    auto eval = [&]() {
      ad::CompGraph gg;
      const ad::NodeRef l = causal::compute_loss(m, ds, idx, 0.003, 1.0, seed, gg);
      gg.forward();
      return gg.value_scalar(l);
    };
    m.graph.logits.data[i] = saved + h;
    const double fp = eval();
    m.graph.logits.data[i] = saved - h;
    const double fm = eval();
    m.graph.logits.data[i] = saved;
    const double numeric = (fp - fm) / (2 * h);
    CHECK(std::fabs(analytic[i] - numeric) <=
          1e-3 * std::max(1e-8, std::fabs(numeric)));
    if (std::fabs(analytic[i]) > 1e-12) ++nonzero;
  }
  CHECK(nonzero == m.graph.logits.size());
}

TEST_CASE("train: deterministic loss history and logits") {
  const DifferenceDataset ds = random_dataset(6, 1, 2, 48, 61);
  TrainingConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 16;
  const CausalGraphParams start = causal::init_graph_params(6, 1);
  const auto r1 = causal::train(ds, cfg, start, tiny_arch(), 9);
  const auto r2 = causal::train(ds, cfg, start, tiny_arch(), 9);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  CHECK(r1.model.graph.logits.data == r2.model.graph.logits.data);
  CHECK(r1.epoch_loss.size() == 30);
}

TEST_CASE("train: no sparsity pressure means no wholesale shrinkage") {
  Rng rng(67);
  const int n = 8;
  DifferenceDataset ds;
  for (int r = 0; r < 96; ++r) {
    std::vector<double> eps(n), act(2), d(1);
    for (auto& v : eps) v = rng.uniform01();
    for (auto& v : act) v = rng.uniform(-1.0, 1.0);
    d[0] = std::fabs(2.0 * (eps[1] - 0.5)) + 0.3;
    ds.add_row(eps, act, d);
  }
  TrainingConfig cfg;
  cfg.epochs = 150;
  cfg.batch = 32;
  cfg.sparse_weight = 0.0;
  const CausalGraphParams start = causal::init_graph_params(n, 1);
  const auto res = causal::train(ds, cfg, start, tiny_arch(), 5);
  const Mat psi0 = causal::expected_graph(start);
  const Mat psi1 = causal::expected_graph(res.model.graph);
  double sum0 = 0.0, sum1 = 0.0;
  for (double v : psi0.data) sum0 += v;
  for (double v : psi1.data) sum1 += v;
  CHECK(sum1 > 0.8 * sum0);
}

TEST_CASE("train: constant zero target is driven to near-zero error") {
  Rng rng(71);
  const int n = 6;
  DifferenceDataset ds;
  for (int r = 0; r < 96; ++r) {
    std::vector<double> eps(n), act(1), d(1, 0.0);
    for (auto& v : eps) v = rng.uniform01();
    act[0] = rng.uniform(-1.0, 1.0);
    ds.add_row(eps, act, d);
  }
  TrainingConfig cfg;
  cfg.epochs = 700;
  cfg.batch = 32;
  cfg.sparse_weight = 0.0;
  const auto res =
      causal::train(ds, cfg, causal::init_graph_params(n, 1), tiny_arch(), 5);
  CHECK(res.epoch_loss.back() < 1e-4);
}

TEST_CASE("train: planted structure separates active from inert rows") {
  // shortened cousin of the acceptance oracle: two planted parameters out of
  // ten, moderate epochs, single seed
  Rng rng(73);
  const int n = 10;
  DifferenceDataset ds;
  for (int r = 0; r < 320; ++r) {
    std::vector<double> eps(n), act(1), d(1);
    for (auto& v : eps) v = rng.uniform01();
    act[0] = rng.uniform(0.0, 1.0);
    d[0] = std::fabs(3.0 * (eps[2] - 0.5)) + std::fabs(2.0 * (eps[7] - 0.5));
    ds.add_row(eps, act, d);
  }
  TrainingConfig cfg;
  cfg.epochs = 800;
  cfg.batch = 64;
  cfg.sparse_weight = 0.003;
  const auto res =
      causal::train(ds, cfg, causal::init_graph_params(n, 1), tiny_arch(), 3);
  const Mat psi = causal::expected_graph(res.model.graph);
  double active_min = 1.0, inert_max = 0.0;
  for (int r = 0; r < n; ++r) {
    if (r == 2 || r == 7) {
      active_min = std::min(active_min, psi(r, 0));
    } else {
      inert_max = std::max(inert_max, psi(r, 0));
    }
  }
  CHECK(active_min > inert_max);
}

TEST_CASE("train: divergent loss raises a numeric error with the epoch") {
  DifferenceDataset ds;
  ds.add_row({0.5, 0.5}, {0.1}, {1e200});
  ds.add_row({0.2, 0.8}, {0.3}, {1e200});
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.batch = 2;
  try {
    causal::train(ds, cfg, causal::init_graph_params(2, 1), tiny_arch(), 1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("train: rejects inconsistent inputs") {
  DifferenceDataset ds = random_dataset(4, 1, 2, 8, 3);
  TrainingConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(
      causal::train(ds, cfg, causal::init_graph_params(5, 1), tiny_arch(), 1),
      ShapeError);
  TrainingConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(
      causal::train(ds, bad, causal::init_graph_params(4, 1), tiny_arch(), 1),
      ConfigError);
  DifferenceDataset neg;
  neg.add_row({0.1}, {0.2}, {-1.0});
  CHECK_THROWS_AS(
      causal::train(neg, cfg, causal::init_graph_params(1, 1), tiny_arch(), 1),
      ContractError);
}

TEST_CASE("model serialization round-trips bit-exactly") {
  CausalModel m = tiny_model(5, 2, 3, 91);
  Rng rng(93);
  for (double& v : m.graph.logits.data) v = rng.uniform(-3.0, 3.0);
  const nlohmann::json j = causal::model_to_json(m);
  const CausalModel r = causal::model_from_json(j);
  CHECK(r.n_params == m.n_params);
  CHECK(r.k == m.k);
  CHECK(r.action_dim == m.action_dim);
  CHECK(r.graph.logits.data == m.graph.logits.data);
  CHECK(r.encoder.layers[0].w.data == m.encoder.layers[0].w.data);
  CHECK(r.decoder.layers.back().b.data == m.decoder.layers.back().b.data);
  CHECK(r.arch.decoder_hidden == m.arch.decoder_hidden);

  // the round-tripped model predicts identically
  const Mat psi = causal::expected_graph(m.graph);
  const std::vector<double> eps{0.2, 0.4, 0.6, 0.8, 0.5};
  const std::vector<double> act{0.1, 0.2, 0.3};
  CHECK(predict(m, psi, eps, act) == predict(r, psi, eps, act));
}
