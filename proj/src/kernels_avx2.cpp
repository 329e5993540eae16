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
// AVX2+FMA backend. Compiled with -mavx2 -mfma; only dispatched to when the
// CPU reports support. Lane arithmetic mirrors kernels_detail.hpp exactly;
// ragged tails reuse the scalar per-element helpers.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "kernels_detail.hpp"
#include "simcal/kernels.hpp"

namespace simcal::kern {
namespace {

using detail::exp_one;
using detail::relu_one;
using detail::sigmoid_one;
using detail::tanh_one;

inline double hsum4(__m256d acc) {
  // (l0 + l1) + (l2 + l3); must match the scalar combine.
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const double l0 = _mm_cvtsd_f64(lo);
  const double l1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  const double l2 = _mm_cvtsd_f64(hi);
  const double l3 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
  return (l0 + l1) + (l2 + l3);
}

double dot_a(const double* a, const double* b, size_t n) {
  __m256d v0 = _mm256_setzero_pd();
  __m256d v1 = _mm256_setzero_pd();
  __m256d v2 = _mm256_setzero_pd();
  __m256d v3 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    v0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 0), _mm256_loadu_pd(b + i + 0), v0);
    v1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), v1);
    v2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), v2);
    v3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), v3);
  }
  const __m256d s =
      _mm256_add_pd(_mm256_add_pd(v0, v1), _mm256_add_pd(v2, v3));
  double out = hsum4(s);
  for (; i < n; ++i) out = std::fma(a[i], b[i], out);
  return out;
}

double sum_a(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum4(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void axpy_a(double alpha, const double* x, double* y, size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    _mm256_storeu_pd(y + i + 0, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 0),
                                                _mm256_loadu_pd(y + i + 0)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4),
                                                _mm256_loadu_pd(y + i + 4)));
    _mm256_storeu_pd(y + i + 8, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 8),
                                                _mm256_loadu_pd(y + i + 8)));
    _mm256_storeu_pd(y + i + 12, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 12),
                                                 _mm256_loadu_pd(y + i + 12)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale_a(double alpha, const double* x, double* y, size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = alpha * x[i];
}

void add_a(const double* a, const double* b, double* c, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_a(const double* a, const double* b, double* c, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(c + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_a(const double* a, const double* b, double* c, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) c[i] = a[i] * b[i];
}

void add_scalar_acc_a(double c, double* dst, size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), cv));
  for (; i < n; ++i) dst[i] += c;
}

void fma_acc_a(const double* a, const double* b, double* dst, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i,
                     _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                                     _mm256_loadu_pd(b + i),
                                     _mm256_loadu_pd(dst + i)));
  }
  for (; i < n; ++i) dst[i] = std::fma(a[i], b[i], dst[i]);
}

// Register-tiled (4 rows x 8 columns held across the whole inner dimension;
// remainder rows use a 1 x 16 tile). Per output element the fma sequence is
// plain ascending l with a single accumulator, so the result matches the
// scalar formulation bit for bit. Inner dimensions here stay <= a few
// hundred, so B panels remain cache-resident without extra blocking.
void matmul_acc_a(const double* a, const double* b, double* c, size_t m,
                  size_t k, size_t n) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    double* c0 = c + i * n;
    size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d acc[4][2];
      for (int r = 0; r < 4; ++r) {
        acc[r][0] = _mm256_loadu_pd(c0 + r * n + j);
        acc[r][1] = _mm256_loadu_pd(c0 + r * n + j + 4);
      }
      for (size_t l = 0; l < k; ++l) {
        const double* brow = b + l * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        for (int r = 0; r < 4; ++r) {
          const __m256d av = _mm256_set1_pd(a0[r * k + l]);
          acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
          acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
        }
      }
      for (int r = 0; r < 4; ++r) {
        _mm256_storeu_pd(c0 + r * n + j, acc[r][0]);
        _mm256_storeu_pd(c0 + r * n + j + 4, acc[r][1]);
      }
    }
    for (; j + 4 <= n; j += 4) {
      __m256d acc[4];
      for (int r = 0; r < 4; ++r) acc[r] = _mm256_loadu_pd(c0 + r * n + j);
      for (size_t l = 0; l < k; ++l) {
        const __m256d b0 = _mm256_loadu_pd(b + l * n + j);
        for (int r = 0; r < 4; ++r) {
          acc[r] = _mm256_fmadd_pd(_mm256_set1_pd(a0[r * k + l]), b0, acc[r]);
        }
      }
      for (int r = 0; r < 4; ++r) _mm256_storeu_pd(c0 + r * n + j, acc[r]);
    }
    for (; j < n; ++j) {
      for (int r = 0; r < 4; ++r) {
        double cv = c0[r * n + j];
        for (size_t l = 0; l < k; ++l) {
          cv = std::fma(a0[r * k + l], b[l * n + j], cv);
        }
        c0[r * n + j] = cv;
      }
    }
  }
  for (; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(crow + j + 0);
      __m256d c1 = _mm256_loadu_pd(crow + j + 4);
      __m256d c2 = _mm256_loadu_pd(crow + j + 8);
      __m256d c3 = _mm256_loadu_pd(crow + j + 12);
      for (size_t l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(arow[l]);
        const double* brow = b + l * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 0), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
      }
      _mm256_storeu_pd(crow + j + 0, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
      _mm256_storeu_pd(crow + j + 8, c2);
      _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(crow + j);
      for (size_t l = 0; l < k; ++l) {
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(arow[l]),
                             _mm256_loadu_pd(b + l * n + j), c0);
      }
      _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) {
      double cv = crow[j];
      for (size_t l = 0; l < k; ++l) cv = std::fma(arow[l], b[l * n + j], cv);
      crow[j] = cv;
    }
  }
}

// Two dots interleaved per pass share the A-row loads; each output keeps the
// exact dot() accumulation pattern.
void matmul_bt_a(const double* a, const double* b, double* c, size_t m,
                 size_t n, size_t k) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    size_t l = 0;
    for (; l + 2 <= k; l += 2) {
      const double* b0 = b + l * n;
      const double* b1 = b0 + n;
      __m256d u0 = _mm256_setzero_pd(), u1 = _mm256_setzero_pd(),
              u2 = _mm256_setzero_pd(), u3 = _mm256_setzero_pd();
      __m256d w0 = _mm256_setzero_pd(), w1 = _mm256_setzero_pd(),
              w2 = _mm256_setzero_pd(), w3 = _mm256_setzero_pd();
      size_t j = 0;
      for (; j + 16 <= n; j += 16) {
        const __m256d a0 = _mm256_loadu_pd(arow + j + 0);
        const __m256d a1 = _mm256_loadu_pd(arow + j + 4);
        const __m256d a2 = _mm256_loadu_pd(arow + j + 8);
        const __m256d a3 = _mm256_loadu_pd(arow + j + 12);
        u0 = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j + 0), u0);
        u1 = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b0 + j + 4), u1);
        u2 = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b0 + j + 8), u2);
        u3 = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b0 + j + 12), u3);
        w0 = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b1 + j + 0), w0);
        w1 = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j + 4), w1);
        w2 = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b1 + j + 8), w2);
        w3 = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b1 + j + 12), w3);
      }
      double s0 = hsum4(_mm256_add_pd(_mm256_add_pd(u0, u1), _mm256_add_pd(u2, u3)));
      double s1 = hsum4(_mm256_add_pd(_mm256_add_pd(w0, w1), _mm256_add_pd(w2, w3)));
      for (; j < n; ++j) {
        s0 = std::fma(arow[j], b0[j], s0);
        s1 = std::fma(arow[j], b1[j], s1);
      }
      crow[l] += s0;
      crow[l + 1] += s1;
    }
    for (; l < k; ++l) {
      crow[l] += dot_a(arow, b + l * n, n);
    }
  }
}

// --- shared-polynomial transcendentals -------------------------------------

inline __m256d exp4(__m256d x) {
  const __m256d lo = _mm256_set1_pd(detail::kExpLo);
  const __m256d hi = _mm256_set1_pd(detail::kExpHi);
  __m256d xc = _mm256_max_pd(x, lo);
  xc = _mm256_min_pd(xc, hi);
  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(xc, _mm256_set1_pd(detail::kInvLn2)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fmadd_pd(n, _mm256_set1_pd(-detail::kLn2Hi), xc);
  r = _mm256_fmadd_pd(n, _mm256_set1_pd(-detail::kLn2Lo), r);
  __m256d q = _mm256_set1_pd(detail::kExpC[11]);
  for (int i = 10; i >= 0; --i) {
    q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(detail::kExpC[i]));
  }
  const __m256d t = _mm256_fmadd_pd(_mm256_mul_pd(r, r), q, r);
  const __m256d p = _mm256_add_pd(_mm256_set1_pd(1.0), t);
  // n is integral and |n| < 2^51: the 2^52+2^51 magic constant exposes it in
  // the low bits of the significand.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  const __m256i ni = _mm256_sub_epi64(
      _mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

inline __m256d abs4(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

inline __m256d tanh4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d a = abs4(x);
  a = _mm256_min_pd(a, _mm256_set1_pd(20.0));
  const __m256d e = exp4(_mm256_mul_pd(_mm256_set1_pd(2.0), a));
  const __m256d t = _mm256_sub_pd(
      one, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_add_pd(e, one)));
  const __m256d sign = _mm256_and_pd(x, _mm256_set1_pd(-0.0));
  return _mm256_or_pd(t, sign);
}

inline __m256d sigmoid4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp4(_mm256_sub_pd(_mm256_setzero_pd(), abs4(x)));
  const __m256d d = _mm256_add_pd(one, e);
  const __m256d pos = _mm256_div_pd(one, d);
  const __m256d neg = _mm256_div_pd(e, d);
  const __m256d ge = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GE_OQ);
  return _mm256_blendv_pd(neg, pos, ge);
}

void exp_v_a(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = exp_one(x[i]);
}

void tanh_v_a(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = tanh_one(x[i]);
}

void sigmoid_v_a(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, sigmoid4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = sigmoid_one(x[i]);
}

void relu_v_a(const double* x, double* y, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_and_pd(v, mask));
  }
  for (; i < n; ++i) y[i] = relu_one(x[i]);
}

void square_v_a(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(v, v));
  }
  for (; i < n; ++i) y[i] = x[i] * x[i];
}

void abs_v_a(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, abs4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = std::fabs(x[i]);
}

void tanh_bwd_a(const double* g, const double* y, double* dst, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d t = _mm256_fnmadd_pd(yv, yv, one);  // 1 - y*y, one rounding
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(_mm256_loadu_pd(g + i), t,
                                              _mm256_loadu_pd(dst + i)));
  }
  for (; i < n; ++i) {
    const double t = std::fma(-y[i], y[i], 1.0);
    dst[i] = std::fma(g[i], t, dst[i]);
  }
}

void tanh_grad_a(const double* g, const double* y, double* dst, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d t = _mm256_fnmadd_pd(yv, yv, one);
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(g + i), t));
  }
  for (; i < n; ++i) {
    const double t = std::fma(-y[i], y[i], 1.0);
    dst[i] = g[i] * t;
  }
}

void sigmoid_bwd_a(const double* g, const double* y, double* dst, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d t = _mm256_mul_pd(yv, _mm256_sub_pd(one, yv));
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(_mm256_loadu_pd(g + i), t,
                                              _mm256_loadu_pd(dst + i)));
  }
  for (; i < n; ++i) {
    const double t = y[i] * (1.0 - y[i]);
    dst[i] = std::fma(g[i], t, dst[i]);
  }
}

void relu_bwd_a(const double* g, const double* x, double* dst, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d gm = _mm256_and_pd(_mm256_loadu_pd(g + i), mask);
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), gm));
  }
  for (; i < n; ++i) dst[i] += (x[i] > 0.0) ? g[i] : 0.0;
}

void square_bwd_a(const double* g, const double* x, double* dst, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(dst + i,
                     _mm256_fmadd_pd(_mm256_loadu_pd(g + i),
                                     _mm256_add_pd(xv, xv),
                                     _mm256_loadu_pd(dst + i)));
  }
  for (; i < n; ++i) dst[i] = std::fma(g[i], x[i] + x[i], dst[i]);
}

void abs_bwd_a(const double* g, const double* x, double* dst, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d gp = _mm256_and_pd(gv, _mm256_cmp_pd(xv, zero, _CMP_GT_OQ));
    const __m256d gn = _mm256_and_pd(_mm256_sub_pd(zero, gv),
                                     _mm256_cmp_pd(xv, zero, _CMP_LT_OQ));
    const __m256d d = _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(dst + i), gp), gn);
    _mm256_storeu_pd(dst + i, d);
  }
  for (; i < n; ++i) dst[i] = detail::abs_bwd_one(dst[i], g[i], x[i]);
}

void adam_update_a(double* w, const double* g, double* m, double* v, size_t n,
                   double lr, double beta1, double beta2, double eps,
                   double bc1, double bc2) {
  const detail::AdamScalars s{lr,  beta1, beta2,       eps,
                              bc1, bc2,   1.0 - beta1, 1.0 - beta2};
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d ob1 = _mm256_set1_pd(s.one_m_b1);
  const __m256d ob2 = _mm256_set1_pd(s.one_m_b2);
  const __m256d bc1v = _mm256_set1_pd(bc1);
  const __m256d bc2v = _mm256_set1_pd(bc2);
  const __m256d epsv = _mm256_set1_pd(eps);
  const __m256d lrv = _mm256_set1_pd(lr);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d mi =
        _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(ob1, gv));
    const __m256d vi = _mm256_fmadd_pd(
        b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(ob2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mh = _mm256_mul_pd(mi, bc1v);
    const __m256d vh = _mm256_mul_pd(vi, bc2v);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), epsv);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mh), den);
    _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
  }
  for (; i < n; ++i) detail::adam_one(w[i], g[i], m[i], v[i], s);
}

bool has_nonfinite_a(const double* x, size_t n) {
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d bad = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = abs4(_mm256_loadu_pd(x + i));
    // finite iff |x| < inf; NaN compares false as well.
    bad = _mm256_or_pd(
        bad, _mm256_xor_pd(_mm256_cmp_pd(v, inf, _CMP_LT_OQ),
                           _mm256_castsi256_pd(_mm256_set1_epi64x(-1))));
  }
  if (_mm256_movemask_pd(bad) != 0) return true;
  for (; i < n; ++i) {
    if (!std::isfinite(x[i])) return true;
  }
  return false;
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table = {
    .dot = dot_a,
    .sum = sum_a,
    .axpy = axpy_a,
    .scale = scale_a,
    .add = add_a,
    .sub = sub_a,
    .mul = mul_a,
    .add_scalar_acc = add_scalar_acc_a,
    .fma_acc = fma_acc_a,
    .matmul_acc = matmul_acc_a,
    .matmul_bt = matmul_bt_a,
    .exp_v = exp_v_a,
    .tanh_v = tanh_v_a,
    .sigmoid_v = sigmoid_v_a,
    .relu_v = relu_v_a,
    .square_v = square_v_a,
    .abs_v = abs_v_a,
    .tanh_bwd = tanh_bwd_a,
    .tanh_grad = tanh_grad_a,
    .sigmoid_bwd = sigmoid_bwd_a,
    .relu_bwd = relu_bwd_a,
    .square_bwd = square_bwd_a,
    .abs_bwd = abs_bwd_a,
    .adam_update = adam_update_a,
    .has_nonfinite = has_nonfinite_a,
};

}  // namespace simcal::kern
