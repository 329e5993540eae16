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
#include <memory>

#include "simcal/error.hpp"
#include "simcal/gradcheck.hpp"
#include "simcal/graph.hpp"
#include "simcal/nn.hpp"
#include "simcal/rng.hpp"

using namespace simcal;

TEST_CASE("square gradient: d(x^2)/dx = 2x") {
  ad::CompGraph g;
  Mat x(1, 1);
  x(0, 0) = 3.0;
  const ad::NodeRef xp = g.param(x.ptr(), 1, 1);
  const ad::NodeRef loss = g.square(xp);
  g.forward();
  CHECK(g.value_scalar(loss) == 9.0);
  g.backward(loss);
  CHECK(g.grad(xp)[0] == 6.0);
}

TEST_CASE("constant loss: all gradients zero") {
  ad::CompGraph g;
  Mat x(2, 2, 1.5);
  const ad::NodeRef xp = g.param(x.ptr(), 2, 2);
  const ad::NodeRef y = g.tanh(xp);
  const ad::NodeRef loss = g.scalar_const(4.0);
  g.forward();
  g.backward(loss);
  for (double v : g.grad(xp)) CHECK(v == 0.0);
  for (double v : g.grad(y)) CHECK(v == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  ad::CompGraph g;
  Mat x(2, 3, 1.0);
  const ad::NodeRef xp = g.param(x.ptr(), 2, 3);
  const ad::NodeRef y = g.tanh(xp);
  g.forward();
  CHECK_THROWS_AS(g.backward(y), ContractError);
}

TEST_CASE("shape errors") {
  ad::CompGraph g;
  Mat a(2, 3, 1.0), b(3, 2, 1.0);
  const ad::NodeRef pa = g.param(a.ptr(), 2, 3);
  const ad::NodeRef pb = g.param(b.ptr(), 3, 2);
  CHECK_THROWS_AS(g.add(pa, pb), ShapeError);
  CHECK_THROWS_AS(g.mul(pa, pb), ShapeError);
  CHECK_THROWS_AS(g.matmul(pa, pa), ShapeError);
  CHECK_NOTHROW(g.matmul(pa, pb));
}

TEST_CASE("unbound input") {
  ad::CompGraph g;
  const ad::NodeRef in = g.input(1, 2);
  const ad::NodeRef loss = g.mean(in);
  (void)loss;
  CHECK_THROWS_AS(g.forward(), ContractError);
}

TEST_CASE("random add/mul/tanh graphs match central finite differences") {
  const double err = gradcheck::grad_check(
      [](ad::CompGraph& g, uint64_t seed) {
        Rng rng(seed);
        auto store = std::make_shared<std::vector<Mat>>();
        store->reserve(4);
        gradcheck::CheckGraph out;
        out.storage = store;
        auto leaf = [&](int r, int c) {
          Mat m(r, c);
          for (double& v : m.data) v = rng.uniform(-1.5, 1.5);
          store->push_back(std::move(m));
          const ad::NodeRef node = g.param(store->back().ptr(), r, c);
          out.params.push_back({node, &store->back()});
          return node;
        };
        const ad::NodeRef a = leaf(2, 3);
        const ad::NodeRef b = leaf(2, 3);
        const ad::NodeRef c = leaf(2, 3);
        const ad::NodeRef t = g.tanh(g.add(g.mul(a, b), c));
        const ad::NodeRef u = g.mul(g.tanh(a), g.add(b, c));
        out.loss = g.mean(g.add(t, u));
        return out;
      },
      60, 1e-5, 99);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: mse of a random 4->2 net") {
  const double err = gradcheck::grad_check(
      [](ad::CompGraph& g, uint64_t seed) {
        Rng rng(seed);
        auto store = std::make_shared<std::vector<nn::ModelWeights>>();
        store->push_back(nn::build_mlp({4, 8, 2}, nn::Activation::kTanh, seed));
        nn::ModelWeights& w = store->back();
        gradcheck::CheckGraph out;
        out.storage = store;
        Mat in(1, 4);
        for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
        Mat target(1, 2);
        for (double& v : target.data) v = rng.uniform(-1.0, 1.0);
        const nn::MlpNodes nodes = nn::bind_mlp(g, w);
        for (size_t i = 0; i < nodes.w.size(); ++i) {
          out.params.push_back({nodes.w[i], &w.layers[i].w});
          out.params.push_back({nodes.b[i], &w.layers[i].b});
        }
        const ad::NodeRef pred = nn::apply_mlp(g, nodes, w, g.constant(in));
        Mat neg = target;
        for (double& v : neg.data) v = -v;
        out.loss = g.mean(g.square(g.add(pred, g.constant(neg))));
        return out;
      },
      100, 1e-5, 7);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: pure linear map is near-exact") {
  const double err = gradcheck::grad_check(
      [](ad::CompGraph& g, uint64_t seed) {
        Rng rng(seed);
        auto store = std::make_shared<std::vector<Mat>>();
        store->reserve(2);
        gradcheck::CheckGraph out;
        out.storage = store;
        Mat w(3, 2);
        for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
        store->push_back(std::move(w));
        const ad::NodeRef wp = g.param(store->back().ptr(), 3, 2);
        out.params.push_back({wp, &store->back()});
        Mat x(1, 3);
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        out.loss = g.mean(g.matmul(g.constant(x), wp));
        return out;
      },
      50, 1e-5, 31);
  CHECK(err < 1e-9);
}

TEST_CASE("grad_check: sigmoid chain of depth 5") {
  const double err = gradcheck::grad_check(
      [](ad::CompGraph& g, uint64_t seed) {
        Rng rng(seed);
        auto store = std::make_shared<std::vector<Mat>>();
        store->reserve(1);
        Mat x(1, 3);
        for (double& v : x.data) v = rng.uniform(-1.5, 1.5);
        store->push_back(std::move(x));
        gradcheck::CheckGraph out;
        out.storage = store;
        const ad::NodeRef xp = g.param(store->back().ptr(), 1, 3);
        out.params.push_back({xp, &store->back()});
        ad::NodeRef h = xp;
        for (int d = 0; d < 5; ++d) h = g.sigmoid(h);
        out.loss = g.mean(h);
        return out;
      },
      50, 1e-5, 55);
  CHECK(err < 1e-4);
}

TEST_CASE("full op set: analytic gradients vs central differences") {
  const double err = gradcheck::grad_check_opset(100, 1e-5, 12345);
  CHECK(err < 1e-4);
}

TEST_CASE("linearity: scaling the loss by 2 scales every gradient by exactly 2") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    Mat a(3, 4), b(4, 2);
    for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : b.data) v = rng.uniform(-1.0, 1.0);

    ad::CompGraph g;
    const ad::NodeRef pa = g.param(a.ptr(), 3, 4);
    const ad::NodeRef pb = g.param(b.ptr(), 4, 2);
    const ad::NodeRef base = g.mean(g.tanh(g.matmul(pa, pb)));
    g.forward();
    g.backward(base);
    const std::vector<double> ga = g.grad(pa);
    const std::vector<double> gb = g.grad(pb);

    ad::CompGraph g2;
    const ad::NodeRef qa = g2.param(a.ptr(), 3, 4);
    const ad::NodeRef qb = g2.param(b.ptr(), 4, 2);
    const ad::NodeRef scaled =
        g2.mul(g2.mean(g2.tanh(g2.matmul(qa, qb))), g2.scalar_const(2.0));
    g2.forward();
    g2.backward(scaled);
    for (size_t i = 0; i < ga.size(); ++i) CHECK(g2.grad(qa)[i] == 2.0 * ga[i]);
    for (size_t i = 0; i < gb.size(); ++i) CHECK(g2.grad(qb)[i] == 2.0 * gb[i]);
  }
}

TEST_CASE("zero-ancestry: disconnected parameters get exact zero gradients") {
  ad::CompGraph g;
  Mat a(2, 2, 0.7), b(2, 2, -0.4);
  const ad::NodeRef pa = g.param(a.ptr(), 2, 2);
  const ad::NodeRef pb = g.param(b.ptr(), 2, 2);
  const ad::NodeRef unused = g.tanh(pb);
  const ad::NodeRef loss = g.mean(g.square(pa));
  (void)unused;
  g.forward();
  g.backward(loss);
  for (double v : g.grad(pb)) CHECK(v == 0.0);
  for (double v : g.grad(unused)) CHECK(v == 0.0);
  bool any = false;
  for (double v : g.grad(pa)) any = any || (v != 0.0);
  CHECK(any);
}

TEST_CASE("determinism: identical seeds produce bit-identical gradients") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Mat a(4, 4);
    for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
    ad::CompGraph g;
    const ad::NodeRef pa = g.param(a.ptr(), 4, 4);
    const ad::NodeRef loss = g.mean(g.square(g.tanh(pa)));
    g.forward();
    g.backward(loss);
    return g.grad(pa);
  };
  const auto g1 = run(77);
  const auto g2 = run(77);
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("softplus composition: value and positivity") {
  ad::CompGraph g;
  Mat x(1, 3);
  x.data = {0.0, -30.0, 5.0};
  const ad::NodeRef xp = g.param(x.ptr(), 1, 3);
  const ad::NodeRef sp = g.softplus(xp);
  g.forward();
  const double* v = g.value_ptr(sp);
  CHECK(v[0] == doctest::Approx(std::log(2.0)));
  CHECK(v[1] > 0.0);
  CHECK(v[1] == doctest::Approx(std::log1p(std::exp(-30.0))).epsilon(1e-10));
  CHECK(v[2] == doctest::Approx(std::log1p(std::exp(5.0))).epsilon(1e-12));
}

TEST_CASE("fused affine_tanh equals tanh(affine) bit for bit") {
  Rng rng(5);
  Mat x(6, 3), w(3, 5), b(1, 5);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : b.data) v = rng.uniform(-1.0, 1.0);

  ad::CompGraph g1;
  const ad::NodeRef x1 = g1.param(x.ptr(), 6, 3);
  const ad::NodeRef w1 = g1.param(w.ptr(), 3, 5);
  const ad::NodeRef b1 = g1.param(b.ptr(), 1, 5);
  const ad::NodeRef f1 = g1.affine_tanh(x1, w1, b1);
  const ad::NodeRef l1 = g1.mean(g1.square(f1));
  g1.forward();
  g1.backward(l1);

  ad::CompGraph g2;
  const ad::NodeRef x2 = g2.param(x.ptr(), 6, 3);
  const ad::NodeRef w2 = g2.param(w.ptr(), 3, 5);
  const ad::NodeRef b2 = g2.param(b.ptr(), 1, 5);
  const ad::NodeRef f2 = g2.tanh(g2.affine(x2, w2, b2));
  const ad::NodeRef l2 = g2.mean(g2.square(f2));
  g2.forward();
  g2.backward(l2);

  CHECK(g1.value_scalar(l1) == g2.value_scalar(l2));
  CHECK(std::memcmp(g1.value_ptr(f1), g2.value_ptr(f2), 6 * 5 * sizeof(double)) == 0);
  CHECK(g1.grad(w1) == g2.grad(w2));
  CHECK(g1.grad(b1) == g2.grad(b2));
  CHECK(g1.grad(x1) == g2.grad(x2));
}

TEST_CASE("graph_mix equals the explicit weighted sum") {
  Rng rng(9);
  const int n = 5, k = 2, rows = 4, cols = 3;
  Mat gm(n, k);
  for (double& v : gm.data) v = rng.uniform(0.0, 1.0);
  std::vector<Mat> z(n, Mat(rows, cols));
  for (auto& m : z) {
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  }

  ad::CompGraph g;
  const ad::NodeRef gmn = g.param(gm.ptr(), n, k);
  std::vector<ad::NodeRef> zs;
  for (auto& m : z) zs.push_back(g.param(m.ptr(), rows, cols));
  const ad::NodeRef mix = g.graph_mix(gmn, zs, 1);
  const ad::NodeRef loss = g.mean(g.square(mix));
  g.forward();
  const double* v = g.value_ptr(mix);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double expect = 0.0;
      for (int q = 0; q < n; ++q) expect += gm(q, 1) * z[q](r, c);
      CHECK(v[r * cols + c] == doctest::Approx(expect).epsilon(1e-13));
    }
  }
  // gradients of the mix against finite differences on one weight entry
  g.backward(loss);
  const double analytic = g.grad(gmn)[1 * k + 1];
  const double h = 1e-6;
  const double saved = gm(1, 1);
  gm(1, 1) = saved + h;
  g.forward();
  const double fp = g.value_scalar(loss);
  gm(1, 1) = saved - h;
  g.forward();
  const double fm = g.value_scalar(loss);
  gm(1, 1) = saved;
  CHECK(analytic == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("repeated forward on rebindable inputs is pure") {
  ad::CompGraph g;
  const ad::NodeRef in = g.input(2, 2);
  Mat a(2, 2);
  a.data = {1.0, 2.0, 3.0, 4.0};
  g.bind(in, a.ptr());
  const ad::NodeRef out = g.mean(g.square(in));
  g.forward();
  const double v1 = g.value_scalar(out);
  g.forward();
  CHECK(g.value_scalar(out) == v1);
  Mat b(2, 2);
  b.data = {2.0, 2.0, 2.0, 2.0};
  g.bind(in, b.ptr());
  g.forward();
  CHECK(g.value_scalar(out) == 4.0);
}
