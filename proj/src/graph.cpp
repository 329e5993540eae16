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

#include "simcal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "simcal/error.hpp"
#include "simcal/kernels.hpp"

namespace simcal::ad {

namespace {

bool is_scalar_shape(int rows, int cols) { return rows == 1 && cols == 1; }

void transpose(const double* src, int rows, int cols, double* dst) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      dst[static_cast<size_t>(c) * rows + r] = src[static_cast<size_t>(r) * cols + c];
    }
  }
}

}  // namespace

int CompGraph::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

NodeRef CompGraph::input(int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("input: non-positive shape");
  Node n;
  n.op = OpKind::kInput;
  n.rows = rows;
  n.cols = cols;
  return {push(std::move(n))};
}

NodeRef CompGraph::param(const double* data, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("param: non-positive shape");
  Node n;
  n.op = OpKind::kParam;
  n.rows = rows;
  n.cols = cols;
  n.ext = data;
  return {push(std::move(n))};
}

NodeRef CompGraph::constant(const Mat& value) {
  Node n;
  n.op = OpKind::kConst;
  n.rows = value.rows;
  n.cols = value.cols;
  n.value = value.data;
  return {push(std::move(n))};
}

NodeRef CompGraph::scalar_const(double v) {
  Mat m(1, 1);
  m.data[0] = v;
  return constant(m);
}

void CompGraph::bind(NodeRef input_node, const double* data) {
  Node& n = nodes_.at(input_node.id);
  if (n.op != OpKind::kInput) throw ContractError("bind: node is not an input");
  n.ext = data;
}

void CompGraph::check_same_or_scalar(const char* what, int a, int b) const {
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  const bool ok = (na.rows == nb.rows && na.cols == nb.cols) ||
                  is_scalar_shape(na.rows, na.cols) ||
                  is_scalar_shape(nb.rows, nb.cols);
  if (!ok) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     std::to_string(na.rows) + "x" + std::to_string(na.cols) +
                     " vs " + std::to_string(nb.rows) + "x" +
                     std::to_string(nb.cols));
  }
}

NodeRef CompGraph::add(NodeRef a, NodeRef b) {
  check_same_or_scalar("add", a.id, b.id);
  Node n;
  n.op = OpKind::kAdd;
  n.a = a.id;
  n.b = b.id;
  const Node& big = is_scalar_shape(nodes_[a.id].rows, nodes_[a.id].cols)
                        ? nodes_[b.id]
                        : nodes_[a.id];
  n.rows = big.rows;
  n.cols = big.cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::mul(NodeRef a, NodeRef b) {
  check_same_or_scalar("mul", a.id, b.id);
  Node n;
  n.op = OpKind::kMul;
  n.a = a.id;
  n.b = b.id;
  const Node& big = is_scalar_shape(nodes_[a.id].rows, nodes_[a.id].cols)
                        ? nodes_[b.id]
                        : nodes_[a.id];
  n.rows = big.rows;
  n.cols = big.cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::matmul(NodeRef a, NodeRef b) {
  const Node& na = nodes_.at(a.id);
  const Node& nb = nodes_.at(b.id);
  if (na.cols != nb.rows) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(na.cols) +
                     " vs " + std::to_string(nb.rows));
  }
  Node n;
  n.op = OpKind::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.rows = na.rows;
  n.cols = nb.cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::affine(NodeRef x, NodeRef w, NodeRef bias) {
  const Node& nx = nodes_.at(x.id);
  const Node& nw = nodes_.at(w.id);
  const Node& nb = nodes_.at(bias.id);
  if (nx.cols != nw.rows) {
    throw ShapeError("affine: inner dimensions " + std::to_string(nx.cols) +
                     " vs " + std::to_string(nw.rows));
  }
  if (!(nb.rows == 1 && nb.cols == nw.cols)) {
    throw ShapeError("affine: bias must be 1x" + std::to_string(nw.cols));
  }
  Node n;
  n.op = OpKind::kAffine;
  n.a = x.id;
  n.b = w.id;
  n.c = bias.id;
  n.rows = nx.rows;
  n.cols = nw.cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::affine_tanh(NodeRef x, NodeRef w, NodeRef bias) {
  NodeRef pre = affine(x, w, bias);
  Node& n = nodes_.back();
  n.op = OpKind::kAffineTanh;
  return pre;
}

NodeRef CompGraph::graph_mix(NodeRef g_matrix, const std::vector<NodeRef>& z,
                             int column) {
  const Node& gm = nodes_.at(g_matrix.id);
  if (z.empty()) throw ContractError("graph_mix: no feature nodes");
  if (gm.rows != static_cast<int>(z.size())) {
    throw ShapeError("graph_mix: matrix has " + std::to_string(gm.rows) +
                     " rows for " + std::to_string(z.size()) + " features");
  }
  if (column < 0 || column >= gm.cols) {
    throw ShapeError("graph_mix: column out of range");
  }
  const Node& z0 = nodes_.at(z[0].id);
  for (const NodeRef& zr : z) {
    const Node& nz = nodes_.at(zr.id);
    if (nz.rows != z0.rows || nz.cols != z0.cols) {
      throw ShapeError("graph_mix: feature shapes differ");
    }
  }
  Node n;
  n.op = OpKind::kGraphMix;
  n.a = g_matrix.id;
  n.attr = column;
  n.extra.reserve(z.size());
  for (const NodeRef& zr : z) n.extra.push_back(zr.id);
  n.rows = z0.rows;
  n.cols = z0.cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::tanh(NodeRef a) {
  Node n;
  n.op = OpKind::kTanh;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::relu(NodeRef a) {
  Node n;
  n.op = OpKind::kRelu;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::sigmoid(NodeRef a) {
  Node n;
  n.op = OpKind::kSigmoid;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::exp(NodeRef a) {
  Node n;
  n.op = OpKind::kExp;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::log(NodeRef a) {
  Node n;
  n.op = OpKind::kLog;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::square(NodeRef a) {
  Node n;
  n.op = OpKind::kSquare;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::abs(NodeRef a) {
  Node n;
  n.op = OpKind::kAbs;
  n.a = a.id;
  n.rows = nodes_.at(a.id).rows;
  n.cols = nodes_[a.id].cols;
  n.value.resize(static_cast<size_t>(n.rows) * n.cols);
  return {push(std::move(n))};
}

NodeRef CompGraph::mean(NodeRef a) {
  Node n;
  n.op = OpKind::kMean;
  n.a = a.id;
  n.rows = 1;
  n.cols = 1;
  n.value.resize(1);
  return {push(std::move(n))};
}

NodeRef CompGraph::softplus(NodeRef a) {
  Mat ones(nodes_.at(a.id).rows, nodes_[a.id].cols, 1.0);
  return log(add(exp(a), constant(ones)));
}

const double* CompGraph::vptr(int id) const {
  const Node& n = nodes_[id];
  if (n.op == OpKind::kInput || n.op == OpKind::kParam) {
    if (n.ext == nullptr) throw ContractError("forward: unbound input node");
    return n.ext;
  }
  return n.value.data();
}

double* CompGraph::vptr_mut(int id) { return nodes_[id].value.data(); }

void CompGraph::eval(int id) {
  Node& n = nodes_[id];
  const auto& K = kern::active();
  const size_t sz = static_cast<size_t>(n.rows) * n.cols;
  switch (n.op) {
    case OpKind::kInput:
    case OpKind::kParam:
    case OpKind::kConst:
      return;
    case OpKind::kAdd: {
      const Node& na = nodes_[n.a];
      const Node& nb = nodes_[n.b];
      if (na.rows == nb.rows && na.cols == nb.cols) {
        K.add(vptr(n.a), vptr(n.b), n.value.data(), sz);
      } else if (is_scalar_shape(nb.rows, nb.cols)) {
        std::memcpy(n.value.data(), vptr(n.a), sz * sizeof(double));
        K.add_scalar_acc(*vptr(n.b), n.value.data(), sz);
      } else {
        std::memcpy(n.value.data(), vptr(n.b), sz * sizeof(double));
        K.add_scalar_acc(*vptr(n.a), n.value.data(), sz);
      }
      return;
    }
    case OpKind::kMul: {
      const Node& na = nodes_[n.a];
      const Node& nb = nodes_[n.b];
      if (na.rows == nb.rows && na.cols == nb.cols) {
        K.mul(vptr(n.a), vptr(n.b), n.value.data(), sz);
      } else if (is_scalar_shape(nb.rows, nb.cols)) {
        K.scale(*vptr(n.b), vptr(n.a), n.value.data(), sz);
      } else {
        K.scale(*vptr(n.a), vptr(n.b), n.value.data(), sz);
      }
      return;
    }
    case OpKind::kMatMul: {
      const Node& na = nodes_[n.a];
      std::memset(n.value.data(), 0, sz * sizeof(double));
      K.matmul_acc(vptr(n.a), vptr(n.b), n.value.data(), na.rows, na.cols,
                   n.cols);
      return;
    }
    case OpKind::kAffine:
    case OpKind::kAffineTanh: {
      const Node& nx = nodes_[n.a];
      const double* bias = vptr(n.c);
      for (int i = 0; i < n.rows; ++i) {
        std::memcpy(n.value.data() + static_cast<size_t>(i) * n.cols, bias,
                    static_cast<size_t>(n.cols) * sizeof(double));
      }
      K.matmul_acc(vptr(n.a), vptr(n.b), n.value.data(), nx.rows, nx.cols,
                   n.cols);
      if (n.op == OpKind::kAffineTanh) {
        K.tanh_v(n.value.data(), n.value.data(), sz);
      }
      return;
    }
    case OpKind::kGraphMix: {
      const double* gmat = vptr(n.a);
      const int gcols = nodes_[n.a].cols;
      std::memset(n.value.data(), 0, sz * sizeof(double));
      for (size_t r = 0; r < n.extra.size(); ++r) {
        K.axpy(gmat[r * gcols + n.attr], vptr(n.extra[r]), n.value.data(), sz);
      }
      return;
    }
    case OpKind::kTanh:
      K.tanh_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kRelu:
      K.relu_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kSigmoid:
      K.sigmoid_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kExp:
      K.exp_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kLog: {
      const double* x = vptr(n.a);
      for (size_t i = 0; i < sz; ++i) n.value[i] = std::log(x[i]);
      return;
    }
    case OpKind::kSquare:
      K.square_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kAbs:
      K.abs_v(vptr(n.a), n.value.data(), sz);
      return;
    case OpKind::kMean: {
      const Node& na = nodes_[n.a];
      const size_t m = static_cast<size_t>(na.rows) * na.cols;
      n.value[0] = K.sum(vptr(n.a), m) / static_cast<double>(m);
      return;
    }
  }
}

void CompGraph::forward() {
  for (size_t i = 0; i < nodes_.size(); ++i) eval(static_cast<int>(i));
}

void CompGraph::accumulate(int id) {
  Node& n = nodes_[id];
  const auto& K = kern::active();
  const size_t sz = static_cast<size_t>(n.rows) * n.cols;
  const double* g = n.grad.data();
  auto pgrad = [&](int pid) -> double* { return nodes_[pid].grad.data(); };

  switch (n.op) {
    case OpKind::kInput:
    case OpKind::kParam:
    case OpKind::kConst:
      return;
    case OpKind::kAdd: {
      Node& na = nodes_[n.a];
      Node& nb = nodes_[n.b];
      if (na.rows == nb.rows && na.cols == nb.cols) {
        K.axpy(1.0, g, pgrad(n.a), sz);
        K.axpy(1.0, g, pgrad(n.b), sz);
      } else if (is_scalar_shape(nb.rows, nb.cols)) {
        K.axpy(1.0, g, pgrad(n.a), sz);
        nb.grad[0] += K.sum(g, sz);
      } else {
        K.axpy(1.0, g, pgrad(n.b), sz);
        na.grad[0] += K.sum(g, sz);
      }
      return;
    }
    case OpKind::kMul: {
      Node& na = nodes_[n.a];
      Node& nb = nodes_[n.b];
      if (na.rows == nb.rows && na.cols == nb.cols) {
        K.fma_acc(g, vptr(n.b), pgrad(n.a), sz);
        K.fma_acc(g, vptr(n.a), pgrad(n.b), sz);
      } else if (is_scalar_shape(nb.rows, nb.cols)) {
        K.axpy(*vptr(n.b), g, pgrad(n.a), sz);
        nb.grad[0] += K.dot(g, vptr(n.a), sz);
      } else {
        K.axpy(*vptr(n.a), g, pgrad(n.b), sz);
        na.grad[0] += K.dot(g, vptr(n.b), sz);
      }
      return;
    }
    case OpKind::kMatMul:
    case OpKind::kAffine:
    case OpKind::kAffineTanh: {
      const Node& na = nodes_[n.a];
      const int m = na.rows, k = na.cols, ncols = n.cols;
      const double* aval = vptr(n.a);
      const double* bval = vptr(n.b);
      if (n.op == OpKind::kAffineTanh) {
        // Route the incoming gradient through the activation first.
        scratch2_.resize(sz);
        K.tanh_grad(g, n.value.data(), scratch2_.data(), sz);
        g = scratch2_.data();
      }
      // dA += g * B^T directly; dB += A^T * g through a small transpose.
      K.matmul_bt(g, bval, pgrad(n.a), m, ncols, k);
      scratch_.resize(static_cast<size_t>(m) * k);
      transpose(aval, m, k, scratch_.data());
      K.matmul_acc(scratch_.data(), g, pgrad(n.b), k, m, ncols);
      if (n.op != OpKind::kMatMul) {
        double* dbias = pgrad(n.c);
        for (int i = 0; i < m; ++i) {
          K.axpy(1.0, g + static_cast<size_t>(i) * ncols, dbias, ncols);
        }
      }
      return;
    }
    case OpKind::kGraphMix: {
      const double* gmat = vptr(n.a);
      const int gcols = nodes_[n.a].cols;
      double* dg = pgrad(n.a);
      for (size_t r = 0; r < n.extra.size(); ++r) {
        K.axpy(gmat[r * gcols + n.attr], g, pgrad(n.extra[r]), sz);
        dg[r * gcols + n.attr] += K.dot(g, vptr(n.extra[r]), sz);
      }
      return;
    }
    case OpKind::kTanh:
      K.tanh_bwd(g, n.value.data(), pgrad(n.a), sz);
      return;
    case OpKind::kRelu:
      K.relu_bwd(g, vptr(n.a), pgrad(n.a), sz);
      return;
    case OpKind::kSigmoid:
      K.sigmoid_bwd(g, n.value.data(), pgrad(n.a), sz);
      return;
    case OpKind::kExp:
      K.fma_acc(g, n.value.data(), pgrad(n.a), sz);
      return;
    case OpKind::kLog: {
      const double* x = vptr(n.a);
      double* da = pgrad(n.a);
      for (size_t i = 0; i < sz; ++i) da[i] += g[i] / x[i];
      return;
    }
    case OpKind::kSquare:
      K.square_bwd(g, vptr(n.a), pgrad(n.a), sz);
      return;
    case OpKind::kAbs:
      K.abs_bwd(g, vptr(n.a), pgrad(n.a), sz);
      return;
    case OpKind::kMean: {
      const Node& na = nodes_[n.a];
      const size_t m = static_cast<size_t>(na.rows) * na.cols;
      const double c = n.grad[0] / static_cast<double>(m);
      K.add_scalar_acc(c, pgrad(n.a), m);
      return;
    }
  }
}

void CompGraph::backward(NodeRef loss) {
  Node& ln = nodes_.at(loss.id);
  if (!(ln.rows == 1 && ln.cols == 1)) {
    throw ContractError("backward: loss node must be scalar, got " +
                        std::to_string(ln.rows) + "x" + std::to_string(ln.cols));
  }
  reachable_.assign(nodes_.size(), 0);
  reachable_[loss.id] = 1;
  for (int i = loss.id; i >= 0; --i) {
    if (!reachable_[i]) continue;
    const Node& n = nodes_[i];
    if (n.a >= 0) reachable_[n.a] = 1;
    if (n.b >= 0) reachable_[n.b] = 1;
    if (n.c >= 0) reachable_[n.c] = 1;
    for (int e : n.extra) reachable_[e] = 1;
  }
  for (auto& n : nodes_) {
    const size_t sz = static_cast<size_t>(n.rows) * n.cols;
    if (n.grad.size() != sz) n.grad.assign(sz, 0.0);
    else std::fill(n.grad.begin(), n.grad.end(), 0.0);
  }
  ln.grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    if (reachable_[i]) accumulate(i);
  }
}

int CompGraph::rows(NodeRef n) const { return nodes_.at(n.id).rows; }
int CompGraph::cols(NodeRef n) const { return nodes_.at(n.id).cols; }

const double* CompGraph::value_ptr(NodeRef n) const { return vptr(n.id); }

double CompGraph::value_scalar(NodeRef n) const {
  const Node& node = nodes_.at(n.id);
  if (!(node.rows == 1 && node.cols == 1)) {
    throw ContractError("value_scalar: node is not 1x1");
  }
  return vptr(n.id)[0];
}

const std::vector<double>& CompGraph::grad(NodeRef n) const {
  return nodes_.at(n.id).grad;
}

Mat CompGraph::value_mat(NodeRef n) const {
  const Node& node = nodes_.at(n.id);
  Mat m(node.rows, node.cols);
  std::memcpy(m.ptr(), vptr(n.id),
              static_cast<size_t>(node.rows) * node.cols * sizeof(double));
  return m;
}

Mat CompGraph::grad_mat(NodeRef n) const {
  const Node& node = nodes_.at(n.id);
  Mat m(node.rows, node.cols);
  if (!node.grad.empty()) {
    std::memcpy(m.ptr(), node.grad.data(),
                static_cast<size_t>(node.rows) * node.cols * sizeof(double));
  }
  return m;
}

bool CompGraph::value_nonfinite(NodeRef n) const {
  const Node& node = nodes_.at(n.id);
  return kern::active().has_nonfinite(
      vptr(n.id), static_cast<size_t>(node.rows) * node.cols);
}

}  // namespace simcal::ad
