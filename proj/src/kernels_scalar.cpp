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
// Scalar reference backend. Accumulation patterns (4 interleaved partial
// sums, fma placement) deliberately mirror the AVX2 lanes.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "kernels_detail.hpp"
#include "simcal/kernels.hpp"

namespace simcal::kern {
namespace {

using detail::exp_one;
using detail::relu_one;
using detail::sigmoid_one;
using detail::tanh_one;

double dot_s(const double* a, const double* b, size_t n) {
  // 16 interleaved partial sums (lane j sums indices i % 16 == j), folded
  // pairwise; mirrors the four vector accumulators of the AVX2 kernel.
  double acc[16] = {0.0};
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    for (int j = 0; j < 16; ++j) acc[j] = std::fma(a[i + j], b[i + j], acc[j]);
  }
  double lane[4];
  for (int l = 0; l < 4; ++l) {
    lane[l] = (acc[l] + acc[4 + l]) + (acc[8 + l] + acc[12 + l]);
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

double sum_s(const double* x, size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += x[i + 0];
    acc1 += x[i + 1];
    acc2 += x[i + 2];
    acc3 += x[i + 3];
  }
  double s = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) s += x[i];
  return s;
}

void axpy_s(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale_s(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

void add_s(const double* a, const double* b, double* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_s(const double* a, const double* b, double* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_s(const double* a, const double* b, double* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void add_scalar_acc_s(double c, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += c;
}

void fma_acc_s(const double* a, const double* b, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = std::fma(a[i], b[i], dst[i]);
}

// Per output element the accumulation is one fma per inner index, ascending.
void matmul_acc_s(const double* a, const double* b, double* c, size_t m,
                  size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t l = 0; l < k; ++l) {
      axpy_s(arow[l], b + l * n, crow, n);
    }
  }
}

void matmul_bt_s(const double* a, const double* b, double* c, size_t m,
                 size_t n, size_t k) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (size_t l = 0; l < k; ++l) {
      crow[l] += dot_s(arow, b + l * n, n);
    }
  }
}

void exp_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = exp_one(x[i]);
}

void tanh_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = tanh_one(x[i]);
}

void sigmoid_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = sigmoid_one(x[i]);
}

void relu_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = relu_one(x[i]);
}

void square_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] * x[i];
}

void abs_v_s(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::fabs(x[i]);
}

void tanh_bwd_s(const double* g, const double* y, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double t = std::fma(-y[i], y[i], 1.0);
    dst[i] = std::fma(g[i], t, dst[i]);
  }
}

void tanh_grad_s(const double* g, const double* y, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double t = std::fma(-y[i], y[i], 1.0);
    dst[i] = g[i] * t;
  }
}

void sigmoid_bwd_s(const double* g, const double* y, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double t = y[i] * (1.0 - y[i]);
    dst[i] = std::fma(g[i], t, dst[i]);
  }
}

void relu_bwd_s(const double* g, const double* x, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += (x[i] > 0.0) ? g[i] : 0.0;
}

void square_bwd_s(const double* g, const double* x, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = std::fma(g[i], x[i] + x[i], dst[i]);
}

void abs_bwd_s(const double* g, const double* x, double* dst, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = detail::abs_bwd_one(dst[i], g[i], x[i]);
}

void adam_update_s(double* w, const double* g, double* m, double* v, size_t n,
                   double lr, double beta1, double beta2, double eps,
                   double bc1, double bc2) {
  const detail::AdamScalars s{lr,  beta1, beta2,       eps,
                              bc1, bc2,   1.0 - beta1, 1.0 - beta2};
  for (size_t i = 0; i < n; ++i) detail::adam_one(w[i], g[i], m[i], v[i], s);
}

bool has_nonfinite_s(const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return true;
  }
  return false;
}

}  // namespace

extern const KernelTable kScalarTable;
const KernelTable kScalarTable = {
    .dot = dot_s,
    .sum = sum_s,
    .axpy = axpy_s,
    .scale = scale_s,
    .add = add_s,
    .sub = sub_s,
    .mul = mul_s,
    .add_scalar_acc = add_scalar_acc_s,
    .fma_acc = fma_acc_s,
    .matmul_acc = matmul_acc_s,
    .matmul_bt = matmul_bt_s,
    .exp_v = exp_v_s,
    .tanh_v = tanh_v_s,
    .sigmoid_v = sigmoid_v_s,
    .relu_v = relu_v_s,
    .square_v = square_v_s,
    .abs_v = abs_v_s,
    .tanh_bwd = tanh_bwd_s,
    .tanh_grad = tanh_grad_s,
    .sigmoid_bwd = sigmoid_bwd_s,
    .relu_bwd = relu_bwd_s,
    .square_bwd = square_bwd_s,
    .abs_bwd = abs_bwd_s,
    .adam_update = adam_update_s,
    .has_nonfinite = has_nonfinite_s,
};

}  // namespace simcal::kern
