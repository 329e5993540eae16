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
// Per-element reference semantics shared by both kernel backends. The AVX2
// code mirrors these formulas operation for operation; any change here must
// be reflected there or the bit-equivalence tests will fail.

#ifndef SIMCAL_KERNELS_DETAIL_HPP_
#define SIMCAL_KERNELS_DETAIL_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>

namespace simcal::kern::detail {

// exp: argument reduction x = n*ln2 + r with a Cody-Waite split, Taylor
// series on |r| <= ln2/2, then exponent reconstruction. About 1 ulp.
inline constexpr double kInvLn2 = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kExpLo = -706.0;  // keeps 2^n in normal range
inline constexpr double kExpHi = 709.0;
inline constexpr double kExpC[12] = {
    5.0000000000000000000e-01,  // 1/2!
    1.6666666666666666667e-01,  // 1/3!
    4.1666666666666666667e-02,  // 1/4!
    8.3333333333333333333e-03,  // 1/5!
    1.3888888888888888889e-03,  // 1/6!
    1.9841269841269841270e-04,  // 1/7!
    2.4801587301587301587e-05,  // 1/8!
    2.7557319223985890653e-06,  // 1/9!
    2.7557319223985890653e-07,  // 1/10!
    2.5052108385441718775e-08,  // 1/11!
    2.0876756987868098979e-09,  // 1/12!
    1.6059043836821614599e-10,  // 1/13!
};

inline double exp_one(double x) {
  // Clamp with max/min ternaries matching vmaxpd/vminpd semantics.
  double xc = (x > kExpLo) ? x : kExpLo;
  xc = (xc < kExpHi) ? xc : kExpHi;
  const double n = std::nearbyint(xc * kInvLn2);
  double r = std::fma(n, -kLn2Hi, xc);
  r = std::fma(n, -kLn2Lo, r);
  double q = kExpC[11];
  for (int i = 10; i >= 0; --i) q = std::fma(q, r, kExpC[i]);
  const double t = std::fma(r * r, q, r);
  const double p = 1.0 + t;
  const auto ni = static_cast<int64_t>(n);  // n is exactly integral
  uint64_t bits = static_cast<uint64_t>(ni + 1023) << 52;
  double s;
  std::memcpy(&s, &bits, sizeof(s));
  return p * s;
}

inline double tanh_one(double x) {
  double a = std::fabs(x);
  a = (a < 20.0) ? a : 20.0;
  const double e = exp_one(2.0 * a);
  const double t = 1.0 - 2.0 / (e + 1.0);
  return std::copysign(t, x);
}

inline double sigmoid_one(double x) {
  const double e = exp_one(-std::fabs(x));
  const double d = 1.0 + e;
  const double pos = 1.0 / d;
  const double neg = e / d;
  return (x >= 0.0) ? pos : neg;
}

inline double relu_one(double x) { return (x > 0.0) ? x : 0.0; }

// dst += g * sign(x), written as two masked accumulations to match the
// vector code: dst = (dst + [x>0]g) + [x<0](-g).
inline double abs_bwd_one(double dst, double g, double x) {
  const double gp = (x > 0.0) ? g : 0.0;
  const double gn = (x < 0.0) ? -g : 0.0;
  return (dst + gp) + gn;
}

struct AdamScalars {
  double lr, beta1, beta2, eps, bc1, bc2, one_m_b1, one_m_b2;
};

inline void adam_one(double& w, double g, double& m, double& v,
                     const AdamScalars& s) {
  const double mi = std::fma(s.beta1, m, s.one_m_b1 * g);
  const double vi = std::fma(s.beta2, v, s.one_m_b2 * (g * g));
  m = mi;
  v = vi;
  const double mh = mi * s.bc1;
  const double vh = vi * s.bc2;
  const double den = std::sqrt(vh) + s.eps;
  w = w - (s.lr * mh) / den;
}

}  // namespace simcal::kern::detail

#endif  // SIMCAL_KERNELS_DETAIL_HPP_
