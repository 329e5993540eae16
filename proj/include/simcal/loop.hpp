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
// Outer identification loop: collect paired rollouts, measure the gap,
// causality-guided domain randomization, difference-model training, and
// gradient updates of the environment parameters until the gap closes or the
// iteration budget runs out. A dense variant with a frozen fully connected
// graph and no sparsity penalty serves as the ablation baseline.

#ifndef SIMCAL_LOOP_HPP_
#define SIMCAL_LOOP_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "simcal/causal_model.hpp"
#include "simcal/envsim.hpp"
#include "simcal/mat.hpp"

namespace simcal::loop {

struct RandomizationConfig {
  double threshold = 0.5;          // edge retention on psi row maxima
  double halfwidth_fraction = 0.15;  // delta_r as a fraction of the span
  int m_samples = 64;
  void validate() const;
};

struct ParamOptConfig {
  double step = 0.05;  // eta, in normalized parameter space
  int max_steps = 200;
  double tolerance = 1e-5;
  void validate() const;
};

struct LoopConfig {
  std::string env_name = "air-hockey-2d";
  int max_iter = 10;
  int n_real = 10;
  double stop_threshold = 0.0;  // on the grand-mean trajectory difference
  double obs_noise_sigma = 0.0;
  causal::TrainingConfig training;
  causal::ModelArch arch;
  RandomizationConfig randomization;
  ParamOptConfig param_opt;
  uint64_t master_seed = 1;
  void validate() const;
};

struct FactorStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  env::EnvParamVector eps_raw;
  Mat psi;
  std::vector<FactorStats> diff;
  double grand_mean = 0.0;
  double mape = 0.0;
  std::vector<std::string> active_params;
  double train_loss_final = -1.0;  // -1 when no training ran this iteration
  causal::DifferenceDataset dataset;  // empty on the final iteration
};

struct RunReport {
  std::string env_name;
  std::string algorithm;  // "causal" or "dense"
  std::string status;     // "converged" or "max-iters"
  std::vector<std::string> factor_names;
  std::vector<std::string> param_names;
  std::vector<uint8_t> causal_flags;
  std::vector<IterationRecord> iterations;
  // last trained difference model (absent when no training ran)
  bool has_model = false;
  causal::CausalModel final_model;
};

using SimRolloutFn = std::function<env::FactorizedTrajectory(
    const env::EnvParamVector&, const env::Action&, uint64_t)>;

// Per active row (max_k psi_rk > threshold), M uniform draws in
// [eps_r - delta_r, eps_r + delta_r] clipped to the registry bounds; pruned
// rows are copied bit-identically.
std::vector<env::EnvParamVector> causality_guided_dr(
    const env::ParamRegistry& reg, const env::EnvParamVector& eps,
    const Mat& psi, const RandomizationConfig& cfg, uint64_t seed);

// N x M rows in (n, m)-lexicographic order; row m of group n pairs the
// randomized parameters with the n-th real trajectory under its action.
causal::DifferenceDataset build_dataset(
    const env::ParamRegistry& reg,
    const std::vector<env::FactorizedTrajectory>& real_trajs,
    const std::vector<std::vector<env::EnvParamVector>>& dr_samples,
    const SimRolloutFn& sim_rollout, uint64_t seed);

// Projected gradient descent on the mean predicted difference over the given
// actions, in normalized parameter space, with the expected graph as the
// fixed transform. Rows whose psi maximum falls below freeze_threshold are
// frozen and returned bit-identical. The step is confined to
// [start - trust_radius, start + trust_radius] per coordinate (normalized),
// intersected with [0, 1]: the surrogate is only trusted inside the box the
// training data came from.
env::EnvParamVector optimize_env_params(const env::ParamRegistry& reg,
                                        const env::EnvParamVector& eps,
                                        const causal::CausalModel& model,
                                        const std::vector<env::Action>& actions,
                                        const ParamOptConfig& cfg,
                                        double freeze_threshold,
                                        double trust_radius = 1.0);

// Mean absolute percentage error over the named subset.
double compute_mape(const env::ParamRegistry& reg,
                    const env::EnvParamVector& eps,
                    const env::EnvParamVector& target,
                    const std::vector<std::string>& subset);

RunReport run_discovery(const LoopConfig& cfg, const env::EnvParamVector& target);
RunReport run_baseline_dense(const LoopConfig& cfg,
                             const env::EnvParamVector& target);

}  // namespace simcal::loop

#endif  // SIMCAL_LOOP_HPP_
