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
// Central finite-difference validation of analytic gradients.

#ifndef SIMCAL_GRADCHECK_HPP_
#define SIMCAL_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "simcal/graph.hpp"
#include "simcal/mat.hpp"

namespace simcal::gradcheck {

struct CheckGraph {
  ad::NodeRef loss;
  // Leaf parameter nodes plus the storage they view, perturbed in place.
  std::vector<std::pair<ad::NodeRef, Mat*>> params;
  // Keeps leaf storage alive for the lifetime of the check.
  std::shared_ptr<void> storage;
  // When true the trial is rejected and rebuilt (e.g. an input sits too
  // close to a relu/abs kink for finite differences to be meaningful).
  bool rejected = false;
};

using GraphBuilder = std::function<CheckGraph(ad::CompGraph&, uint64_t seed)>;

// Max over trials and parameter entries of
// |analytic - numeric| / max(1e-8, |numeric|), central differences.
double grad_check(const GraphBuilder& builder, int n_trials, double h,
                  uint64_t seed);

// Random graphs covering the whole supported op set.
double grad_check_opset(int n_trials, double h, uint64_t seed);

}  // namespace simcal::gradcheck

#endif  // SIMCAL_GRADCHECK_HPP_
