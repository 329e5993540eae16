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

#include "simcal/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "simcal/error.hpp"

namespace simcal::kern {

extern const KernelTable kScalarTable;
#if defined(SIMCAL_HAVE_AVX2_BUILD)
extern const KernelTable kAvx2Table;
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(SIMCAL_HAVE_AVX2_BUILD) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  Backend best = cpu_has_avx2_fma() ? Backend::kAvx2 : Backend::kScalar;
  if (const char* env = std::getenv("SIMCAL_KERNELS")) {
    const std::string s(env);
    if (s == "scalar") return Backend::kScalar;
    if (s == "avx2") {
      if (!cpu_has_avx2_fma())
        throw ConfigError("SIMCAL_KERNELS=avx2 but the CPU lacks AVX2+FMA");
      return Backend::kAvx2;
    }
    if (!s.empty())
      throw ConfigError("SIMCAL_KERNELS must be 'scalar' or 'avx2', got '" + s + "'");
  }
  return best;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(initial_backend())};
  return slot;
}

}  // namespace

const char* backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
  return b == Backend::kScalar || cpu_has_avx2_fma();
}

const KernelTable& table(Backend b) {
  if (b == Backend::kScalar) return kScalarTable;
#if defined(SIMCAL_HAVE_AVX2_BUILD)
  if (cpu_has_avx2_fma()) return kAvx2Table;
#endif
  throw ConfigError("kernel backend 'avx2' is not available on this CPU");
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

Backend active_backend() {
  return active_slot().load(std::memory_order_relaxed) == &kScalarTable
             ? Backend::kScalar
             : Backend::kAvx2;
}

void set_backend(Backend b) { active_slot().store(&table(b)); }

}  // namespace simcal::kern
