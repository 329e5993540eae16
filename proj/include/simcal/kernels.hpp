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
// Arithmetic kernels used by the autodiff engine and the trainer. Every
// kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA
// variant selected at runtime. The two backends are bit-identical on finite
// inputs: the scalar code spells out the same accumulation order, the same
// fma placement, and the same polynomial evaluation the vector code uses.
// Transcendentals (exp, tanh, sigmoid) are evaluated with a shared
// polynomial, not libm, so results do not depend on the libm version either.

#ifndef SIMCAL_KERNELS_HPP_
#define SIMCAL_KERNELS_HPP_

#include <cstddef>
#include <cstdint>

namespace simcal::kern {

enum class Backend { kScalar, kAvx2 };

const char* backend_name(Backend b);
bool backend_available(Backend b);

// Active backend. Defaults to the best available; the SIMCAL_KERNELS
// environment variable ("scalar" or "avx2") overrides at startup.
Backend active_backend();
void set_backend(Backend b);  // throws ConfigError if unavailable

struct KernelTable {
  // Reductions. Fixed 4-lane accumulation: partial sums over i % 4, combined
  // as (s0 + s1) + (s2 + s3), then a sequential tail.
  double (*dot)(const double* a, const double* b, size_t n);
  double (*sum)(const double* x, size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, size_t n);
  // y[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* y, size_t n);
  void (*add)(const double* a, const double* b, double* c, size_t n);
  void (*sub)(const double* a, const double* b, double* c, size_t n);
  void (*mul)(const double* a, const double* b, double* c, size_t n);
  // dst[i] += c
  void (*add_scalar_acc)(double c, double* dst, size_t n);
  // dst[i] += a[i] * b[i]
  void (*fma_acc)(const double* a, const double* b, double* dst, size_t n);

  // C[m x n] += A[m x k] * B[k x n], row-major. Accumulation order over the
  // inner dimension is ascending for every output element.
  void (*matmul_acc)(const double* a, const double* b, double* c, size_t m,
                     size_t k, size_t n);
  // C[m x k] += A[m x n] * B[k x n]^T; every output element is one dot()
  // with the dot kernel's accumulation pattern.
  void (*matmul_bt)(const double* a, const double* b, double* c, size_t m,
                    size_t n, size_t k);

  void (*exp_v)(const double* x, double* y, size_t n);
  void (*tanh_v)(const double* x, double* y, size_t n);
  void (*sigmoid_v)(const double* x, double* y, size_t n);
  void (*relu_v)(const double* x, double* y, size_t n);
  void (*square_v)(const double* x, double* y, size_t n);
  void (*abs_v)(const double* x, double* y, size_t n);

  // Backward helpers; y is the cached forward output, x the forward input.
  void (*tanh_bwd)(const double* g, const double* y, double* dst, size_t n);
  // dst = g * (1 - y*y), overwriting dst
  void (*tanh_grad)(const double* g, const double* y, double* dst, size_t n);
  void (*sigmoid_bwd)(const double* g, const double* y, double* dst, size_t n);
  void (*relu_bwd)(const double* g, const double* x, double* dst, size_t n);
  void (*square_bwd)(const double* g, const double* x, double* dst, size_t n);
  void (*abs_bwd)(const double* g, const double* x, double* dst, size_t n);

  // In-place Adam with bias correction factors bc1 = 1/(1-beta1^t),
  // bc2 = 1/(1-beta2^t) supplied by the caller.
  void (*adam_update)(double* w, const double* g, double* m, double* v,
                      size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);

  bool (*has_nonfinite)(const double* x, size_t n);
};

// Table for the active backend.
const KernelTable& active();
// Table for a specific backend (throws ConfigError if unavailable).
const KernelTable& table(Backend b);

}  // namespace simcal::kern

#endif  // SIMCAL_KERNELS_HPP_
