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

#include "simcal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "simcal/error.hpp"
#include "simcal/rng.hpp"

namespace simcal::gradcheck {

double grad_check(const GraphBuilder& builder, int n_trials, double h,
                  uint64_t seed) {
  if (h <= 0.0) throw ContractError("grad_check: h must be positive");
  double max_rel = 0.0;
  int built = 0;
  int attempts = 0;
  while (built < n_trials) {
    if (++attempts > 20 * n_trials) {
      throw ContractError("grad_check: builder rejected too many trials");
    }
    ad::CompGraph g;
    CheckGraph cg = builder(g, derive_seed(seed, "gradcheck-trial", attempts));
    if (cg.rejected) continue;
    ++built;
    g.forward();
    g.backward(cg.loss);
    for (auto& [node, storage] : cg.params) {
      const std::vector<double>& analytic = g.grad(node);
      for (int e = 0; e < storage->size(); ++e) {
        const double x0 = storage->data[e];
        storage->data[e] = x0 + h;
        g.forward();
        const double fp = g.value_scalar(cg.loss);
        storage->data[e] = x0 - h;
        g.forward();
        const double fm = g.value_scalar(cg.loss);
        storage->data[e] = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double rel = std::fabs(analytic[e] - numeric) /
                           std::max(1e-8, std::fabs(numeric));
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return max_rel;
}

namespace {

// deque: leaf Mats must not relocate, the graph and the perturbation list
// both hold pointers into them.
struct OpsetLeaves {
  std::deque<Mat> mats;
};

// Builds a random graph that touches every supported operation. Inputs to
// relu/abs are screened for kink proximity; trials that land within the
// margin are rejected and redrawn.
CheckGraph build_opset_graph(ad::CompGraph& g, uint64_t seed, double margin) {
  Rng rng(seed);
  auto storage = std::make_shared<OpsetLeaves>();

  CheckGraph out;
  out.storage = storage;

  auto new_leaf = [&](int r, int c) {
    Mat m(r, c);
    for (double& v : m.data) v = rng.uniform(-1.5, 1.5);
    storage->mats.push_back(std::move(m));
    Mat* slot = &storage->mats.back();
    ad::NodeRef node = g.param(slot->ptr(), r, c);
    out.params.push_back({node, slot});
    return node;
  };

  struct Live {
    ad::NodeRef node;
    int rows, cols;
  };
  std::vector<Live> live;
  const int r0 = 2 + static_cast<int>(rng.next_u64() % 2);
  const int c0 = 2 + static_cast<int>(rng.next_u64() % 3);
  live.push_back({new_leaf(r0, c0), r0, c0});
  live.push_back({new_leaf(r0, c0), r0, c0});

  std::vector<ad::NodeRef> kink_parents;
  const int n_ops = 8 + static_cast<int>(rng.next_u64() % 5);
  for (int op = 0; op < n_ops; ++op) {
    const Live pick = live[rng.next_u64() % live.size()];
    switch (rng.next_u64() % 10) {
      case 0:
        live.push_back({g.tanh(pick.node), pick.rows, pick.cols});
        break;
      case 1: {
        kink_parents.push_back(pick.node);
        live.push_back({g.relu(pick.node), pick.rows, pick.cols});
        break;
      }
      case 2:
        live.push_back({g.sigmoid(pick.node), pick.rows, pick.cols});
        break;
      case 3: {
        // keep exp arguments small
        ad::NodeRef scaled = g.mul(pick.node, g.scalar_const(0.5));
        live.push_back({g.exp(scaled), pick.rows, pick.cols});
        break;
      }
      case 4: {
        // log of a strictly positive expression
        Mat ones(pick.rows, pick.cols, 1.0);
        ad::NodeRef pos = g.add(g.square(pick.node), g.constant(ones));
        live.push_back({g.log(pos), pick.rows, pick.cols});
        break;
      }
      case 5:
        live.push_back({g.square(pick.node), pick.rows, pick.cols});
        break;
      case 6: {
        kink_parents.push_back(pick.node);
        live.push_back({g.abs(pick.node), pick.rows, pick.cols});
        break;
      }
      case 7: {
        const Live other = live[rng.next_u64() % live.size()];
        if (other.rows == pick.rows && other.cols == pick.cols) {
          live.push_back({g.add(pick.node, other.node), pick.rows, pick.cols});
        } else {
          live.push_back({g.add(pick.node, new_leaf(1, 1)), pick.rows, pick.cols});
        }
        break;
      }
      case 8: {
        const Live other = live[rng.next_u64() % live.size()];
        if (other.rows == pick.rows && other.cols == pick.cols) {
          live.push_back({g.mul(pick.node, other.node), pick.rows, pick.cols});
        } else {
          live.push_back({g.mul(pick.node, new_leaf(1, 1)), pick.rows, pick.cols});
        }
        break;
      }
      case 9: {
        const int c2 = 2 + static_cast<int>(rng.next_u64() % 3);
        ad::NodeRef w = new_leaf(pick.cols, c2);
        ad::NodeRef b = new_leaf(1, c2);
        if (rng.next_u64() % 2 == 0) {
          live.push_back({g.matmul(pick.node, w), pick.rows, c2});
        } else {
          live.push_back({g.affine(pick.node, w, b), pick.rows, c2});
        }
        break;
      }
    }
  }
  out.loss = g.mean(live.back().node);

  g.forward();
  for (ad::NodeRef p : kink_parents) {
    const double* v = g.value_ptr(p);
    const int n = g.rows(p) * g.cols(p);
    for (int i = 0; i < n; ++i) {
      if (std::fabs(v[i]) < margin) {
        out.rejected = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace

double grad_check_opset(int n_trials, double h, uint64_t seed) {
  const double margin = 200.0 * h;
  return grad_check(
      [margin](ad::CompGraph& g, uint64_t s) {
        return build_opset_graph(g, s, margin);
      },
      n_trials, h, seed);
}

}  // namespace simcal::gradcheck
