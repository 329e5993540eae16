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
// Reverse-mode autodiff over a dynamically built tensor tape. Nodes are
// appended in topological order by construction. A graph can be evaluated
// repeatedly: rebind inputs (or update parameter storage in place), call
// forward(), then backward().
//
// Supported operations: add, mul (elementwise, either side may be a 1x1
// scalar), matmul, affine (x*W + row-broadcast bias), tanh, relu, sigmoid,
// exp, log, square, abs, mean. Anything else is composed from these.

#ifndef SIMCAL_GRAPH_HPP_
#define SIMCAL_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "simcal/mat.hpp"

namespace simcal::ad {

enum class OpKind : uint8_t {
  kInput,
  kParam,
  kConst,
  kAdd,
  kMul,
  kMatMul,
  kAffine,
  kTanh,
  kRelu,
  kSigmoid,
  kExp,
  kLog,
  kSquare,
  kAbs,
  kMean,
  // Fused executor forms of op-set compositions (identical math, fewer
  // intermediate buffers):
  kAffineTanh,  // tanh(x*W + b)
  kGraphMix,    // sum_r G[r, col] * Z_r over equally shaped Z_r
};

struct NodeRef {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class CompGraph {
 public:
  // Leaf constructors. Inputs carry externally owned data bound via bind();
  // params view externally owned, mutable storage (update in place between
  // forward passes). Constants are copied into the graph.
  NodeRef input(int rows, int cols);
  NodeRef param(const double* data, int rows, int cols);
  NodeRef constant(const Mat& value);
  NodeRef scalar_const(double v);

  void bind(NodeRef input_node, const double* data);

  NodeRef add(NodeRef a, NodeRef b);
  NodeRef mul(NodeRef a, NodeRef b);
  NodeRef matmul(NodeRef a, NodeRef b);
  NodeRef affine(NodeRef x, NodeRef w, NodeRef bias);
  NodeRef affine_tanh(NodeRef x, NodeRef w, NodeRef bias);
  // sum over r of g_matrix[r, column] * z[r]; all z share one shape.
  NodeRef graph_mix(NodeRef g_matrix, const std::vector<NodeRef>& z, int column);
  NodeRef tanh(NodeRef a);
  NodeRef relu(NodeRef a);
  NodeRef sigmoid(NodeRef a);
  NodeRef exp(NodeRef a);
  NodeRef log(NodeRef a);
  NodeRef square(NodeRef a);
  NodeRef abs(NodeRef a);
  NodeRef mean(NodeRef a);

  // softplus(x) = log(1 + exp(x)), composed from the op set.
  NodeRef softplus(NodeRef a);

  // Recompute every non-leaf node in topological order.
  void forward();

  // Populate gradients of `loss` (must be 1x1) with respect to every
  // ancestor. Non-ancestors get exact zeros.
  void backward(NodeRef loss);

  int rows(NodeRef n) const;
  int cols(NodeRef n) const;
  const double* value_ptr(NodeRef n) const;
  double value_scalar(NodeRef n) const;
  const std::vector<double>& grad(NodeRef n) const;
  Mat value_mat(NodeRef n) const;
  Mat grad_mat(NodeRef n) const;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  bool value_nonfinite(NodeRef n) const;

 private:
  struct Node {
    OpKind op;
    int a = -1, b = -1, c = -1;
    int rows = 0, cols = 0;
    int attr = 0;             // graph_mix column
    std::vector<int> extra;   // graph_mix z parents
    std::vector<double> value;   // computed nodes and constants
    const double* ext = nullptr;  // inputs and params
    std::vector<double> grad;
  };

  int push(Node&& n);
  const double* vptr(int id) const;
  double* vptr_mut(int id);
  void check_same_or_scalar(const char* what, int a, int b) const;
  void eval(int id);
  void accumulate(int id);

  std::vector<Node> nodes_;
  std::vector<uint8_t> reachable_;
  std::vector<double> scratch_;   // transpose buffer for matmul backward
  std::vector<double> scratch2_;  // pre-activation gradient buffer
};

}  // namespace simcal::ad

#endif  // SIMCAL_GRAPH_HPP_
