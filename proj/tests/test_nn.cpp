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

#include "simcal/error.hpp"
#include "simcal/nn.hpp"

using namespace simcal;

TEST_CASE("build_mlp shapes chain as forced by the layer sizes") {
  const nn::ModelWeights w =
      nn::build_mlp({4, 256, 256, 2}, nn::Activation::kTanh, 7);
  REQUIRE(w.layers.size() == 3);
  CHECK(w.layers[0].w.rows == 4);
  CHECK(w.layers[0].w.cols == 256);
  CHECK(w.layers[1].w.rows == 256);
  CHECK(w.layers[1].w.cols == 256);
  CHECK(w.layers[2].w.rows == 256);
  CHECK(w.layers[2].w.cols == 2);
  for (const auto& l : w.layers) {
    CHECK(l.b.rows == 1);
    CHECK(l.b.cols == l.w.cols);
  }
}

TEST_CASE("build_mlp minimal net") {
  const nn::ModelWeights w = nn::build_mlp({1, 1}, nn::Activation::kIdentity, 3);
  REQUIRE(w.layers.size() == 1);
  CHECK(w.layers[0].w.rows == 1);
  CHECK(w.layers[0].w.cols == 1);
  CHECK(w.layers[0].b.size() == 1);
}

TEST_CASE("build_mlp is deterministic per seed, bit-identical") {
  const nn::ModelWeights a = nn::build_mlp({4, 16, 2}, nn::Activation::kTanh, 42);
  const nn::ModelWeights b = nn::build_mlp({4, 16, 2}, nn::Activation::kTanh, 42);
  const nn::ModelWeights c = nn::build_mlp({4, 16, 2}, nn::Activation::kTanh, 43);
  for (size_t i = 0; i < a.layers.size(); ++i) {
    CHECK(a.layers[i].w.data == b.layers[i].w.data);
    CHECK(a.layers[i].b.data == b.layers[i].b.data);
  }
  CHECK(a.layers[0].w.data != c.layers[0].w.data);
}

TEST_CASE("build_mlp init: weights inside the variance-preserving bound, biases zero") {
  const nn::ModelWeights w = nn::build_mlp({8, 32, 4}, nn::Activation::kTanh, 5);
  const double b0 = std::sqrt(6.0 / (8 + 32));
  const double b1 = std::sqrt(6.0 / (32 + 4));
  for (double v : w.layers[0].w.data) CHECK(std::fabs(v) <= b0);
  for (double v : w.layers[1].w.data) CHECK(std::fabs(v) <= b1);
  for (const auto& l : w.layers) {
    for (double v : l.b.data) CHECK(v == 0.0);
  }
}

TEST_CASE("build_mlp rejects bad layer lists") {
  CHECK_THROWS_AS(nn::build_mlp({}, nn::Activation::kTanh, 1), ConfigError);
  CHECK_THROWS_AS(nn::build_mlp({4}, nn::Activation::kTanh, 1), ConfigError);
  CHECK_THROWS_AS(nn::build_mlp({4, 0, 2}, nn::Activation::kTanh, 1), ConfigError);
  CHECK_THROWS_AS(nn::build_mlp({4, -1}, nn::Activation::kTanh, 1), ConfigError);
}

TEST_CASE("forward: identity 1x1 net computes w*x + b") {
  nn::ModelWeights w = nn::build_mlp({1, 1}, nn::Activation::kIdentity, 1);
  w.layers[0].w(0, 0) = 2.0;
  w.layers[0].b(0, 0) = 1.0;
  ad::CompGraph g;
  const ad::NodeRef out = nn::forward(g, w, {3.0});
  g.forward();
  CHECK(g.value_scalar(out) == 7.0);
}

TEST_CASE("forward: zero weights and biases give a zero output vector") {
  nn::ModelWeights w = nn::build_mlp({4, 8, 2}, nn::Activation::kTanh, 2);
  for (auto& l : w.layers) {
    l.w.fill(0.0);
    l.b.fill(0.0);
  }
  ad::CompGraph g;
  const ad::NodeRef out = nn::forward(g, w, {0.3, -0.7, 1.0, 2.0});
  g.forward();
  const double* v = g.value_ptr(out);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 0.0);
}

TEST_CASE("forward is pure: same inputs give bit-identical outputs") {
  const nn::ModelWeights w = nn::build_mlp({4, 16, 2}, nn::Activation::kTanh, 9);
  const std::vector<double> in{0.1, -0.2, 0.3, 0.4};
  double v1[2], v2[2];
  {
    ad::CompGraph g;
    const ad::NodeRef out = nn::forward(g, w, in);
    g.forward();
    std::memcpy(v1, g.value_ptr(out), sizeof(v1));
  }
  {
    ad::CompGraph g;
    const ad::NodeRef out = nn::forward(g, w, in);
    g.forward();
    std::memcpy(v2, g.value_ptr(out), sizeof(v2));
  }
  CHECK(std::memcmp(v1, v2, sizeof(v1)) == 0);
}

TEST_CASE("forward rejects width mismatch") {
  const nn::ModelWeights w = nn::build_mlp({4, 2}, nn::Activation::kTanh, 1);
  ad::CompGraph g;
  CHECK_THROWS_AS(nn::forward(g, w, {1.0, 2.0}), ShapeError);
}

TEST_CASE("adam: zero gradients leave weights unchanged and bump the counter") {
  nn::ModelWeights w = nn::build_mlp({2, 3}, nn::Activation::kTanh, 4);
  const std::vector<double> before = w.layers[0].w.data;
  std::vector<const Mat*> cparams{&w.layers[0].w, &w.layers[0].b};
  nn::AdamState state = nn::make_adam_state(cparams);
  std::vector<Mat> grads{Mat(2, 3, 0.0), Mat(1, 3, 0.0)};
  nn::adam_step(w, grads, state, 0.001);
  CHECK(state.t == 1);
  CHECK(w.layers[0].w.data == before);
  nn::adam_step(w, grads, state, 0.001);
  CHECK(state.t == 2);
  CHECK(w.layers[0].w.data == before);
}

TEST_CASE("adam: first step on a scalar moves by about lr against the gradient") {
  nn::ModelWeights w = nn::build_mlp({1, 1}, nn::Activation::kIdentity, 4);
  w.layers[0].w(0, 0) = 1.0;
  std::vector<const Mat*> cparams{&w.layers[0].w, &w.layers[0].b};
  nn::AdamState state = nn::make_adam_state(cparams);
  std::vector<Mat> grads{Mat(1, 1, 1.0), Mat(1, 1, 0.0)};
  nn::adam_step(w, grads, state, 0.001);
  CHECK(std::fabs(w.layers[0].w(0, 0) - (1.0 - 0.001)) < 1e-6);
}

TEST_CASE("adam: converges on the quadratic (w-5)^2") {
  // gradient fed by hand: d/dw (w-5)^2 = 2(w-5)
  Mat w(1, 1, 0.0);
  std::vector<Mat*> params{&w};
  std::vector<const Mat*> cparams{&w};
  nn::AdamState state = nn::make_adam_state(cparams);
  Mat g(1, 1);
  for (int step = 0; step < 5000; ++step) {
    g(0, 0) = 2.0 * (w(0, 0) - 5.0);
    std::vector<const Mat*> gs{&g};
    nn::adam_step_tensors(params, gs, {"w"}, state, 0.01);
  }
  CHECK(std::fabs(w(0, 0) - 5.0) < 1e-2);
}

TEST_CASE("adam: NaN gradient raises a numeric error naming the tensor") {
  nn::ModelWeights w = nn::build_mlp({2, 2}, nn::Activation::kTanh, 4);
  std::vector<const Mat*> cparams{&w.layers[0].w, &w.layers[0].b};
  nn::AdamState state = nn::make_adam_state(cparams);
  std::vector<Mat> grads{Mat(2, 2, 0.0), Mat(1, 2, 0.0)};
  grads[1](0, 1) = std::nan("");
  try {
    nn::adam_step(w, grads, state, 0.001);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer0.b") != std::string::npos);
  }
}

TEST_CASE("weights serialize to the documented JSON layout and round-trip") {
  const nn::ModelWeights w = nn::build_mlp({3, 5, 2}, nn::Activation::kTanh, 21);
  const nlohmann::json j = nn::weights_to_json(w);
  CHECK(j.contains("layers"));
  CHECK(j.at("activation") == "tanh");
  CHECK(j.at("layers").size() == 2);
  CHECK(j.at("layers").at(0).contains("w"));
  CHECK(j.at("layers").at(0).contains("b"));
  CHECK(j.at("layers").at(0).at("w").size() == 3);
  CHECK(j.at("layers").at(0).at("w").at(0).size() == 5);

  const nn::ModelWeights r = nn::weights_from_json(j);
  REQUIRE(r.layers.size() == w.layers.size());
  for (size_t i = 0; i < w.layers.size(); ++i) {
    CHECK(r.layers[i].w.data == w.layers[i].w.data);
    CHECK(r.layers[i].b.data == w.layers[i].b.data);
  }
  CHECK(r.activation == w.activation);
}

TEST_CASE("weights_from_json rejects broken documents") {
  nlohmann::json j = nn::weights_to_json(nn::build_mlp({2, 2}, nn::Activation::kTanh, 1));
  j["layers"][0]["b"] = {1.0};  // wrong width
  CHECK_THROWS_AS(nn::weights_from_json(j), ParseError);
}
