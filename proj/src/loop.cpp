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

#include "simcal/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simcal/error.hpp"
#include "simcal/rng.hpp"

namespace simcal::loop {

void RandomizationConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("randomization.threshold must be in (0, 1)");
  }
  if (!(halfwidth_fraction > 0.0 && halfwidth_fraction <= 1.0)) {
    throw ConfigError("randomization.halfwidth_fraction must be in (0, 1]");
  }
  if (m_samples < 1) throw ConfigError("randomization.m_samples must be >= 1");
}

void ParamOptConfig::validate() const {
  if (step <= 0.0) throw ConfigError("param_opt.step must be positive");
  if (max_steps < 1) throw ConfigError("param_opt.max_steps must be >= 1");
  if (tolerance <= 0.0) throw ConfigError("param_opt.tolerance must be positive");
}

void LoopConfig::validate() const {
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (n_real < 1) throw ConfigError("n_real must be >= 1");
  if (stop_threshold < 0.0) throw ConfigError("stop_threshold must be >= 0");
  if (obs_noise_sigma < 0.0) throw ConfigError("obs_noise_sigma must be >= 0");
  training.validate();
  randomization.validate();
  param_opt.validate();
}

std::vector<env::EnvParamVector> causality_guided_dr(
    const env::ParamRegistry& reg, const env::EnvParamVector& eps,
    const Mat& psi, const RandomizationConfig& cfg, uint64_t seed) {
  cfg.validate();
  if (psi.rows != reg.size() || psi.cols != reg.k) {
    throw ContractError("causality_guided_dr: psi is " +
                        std::to_string(psi.rows) + "x" +
                        std::to_string(psi.cols) + ", registry wants " +
                        std::to_string(reg.size()) + "x" +
                        std::to_string(reg.k));
  }
  if (static_cast<int>(eps.size()) != reg.size()) {
    throw ContractError("causality_guided_dr: eps size mismatch");
  }
  std::vector<env::EnvParamVector> samples(cfg.m_samples, eps);
  Rng rng(derive_seed(seed, "causal-dr"));
  for (int r = 0; r < reg.size(); ++r) {
    double row_max = 0.0;
    for (int c = 0; c < psi.cols; ++c) row_max = std::max(row_max, psi(r, c));
    if (row_max <= cfg.threshold) continue;
    const env::ParamSpec& spec = reg.specs[r];
    const double delta = cfg.halfwidth_fraction * (spec.max - spec.min);
    for (int m = 0; m < cfg.m_samples; ++m) {
      const double v = rng.uniform(eps[r] - delta, eps[r] + delta);
      samples[m][r] = std::clamp(v, spec.min, spec.max);
    }
  }
  return samples;
}

causal::DifferenceDataset build_dataset(
    const env::ParamRegistry& reg,
    const std::vector<env::FactorizedTrajectory>& real_trajs,
    const std::vector<std::vector<env::EnvParamVector>>& dr_samples,
    const SimRolloutFn& sim_rollout, uint64_t seed) {
  if (real_trajs.size() != dr_samples.size()) {
    throw ContractError("build_dataset: need one sample group per real rollout");
  }
  causal::DifferenceDataset ds;
  for (size_t n = 0; n < real_trajs.size(); ++n) {
    for (size_t m = 0; m < dr_samples[n].size(); ++m) {
      try {
        const env::FactorizedTrajectory sim = sim_rollout(
            dr_samples[n][m], real_trajs[n].action, derive_seed(seed, "pair", n, m));
        ds.add_row(env::normalize_params(reg, dr_samples[n][m]),
                   real_trajs[n].action.v,
                   env::trajectory_difference(sim, real_trajs[n]));
      } catch (const DomainError& e) {
        throw DomainError("build_dataset[n=" + std::to_string(n) +
                          ",m=" + std::to_string(m) + "]: " + e.what());
      }
    }
  }
  return ds;
}

env::EnvParamVector optimize_env_params(const env::ParamRegistry& reg,
                                        const env::EnvParamVector& eps,
                                        const causal::CausalModel& model,
                                        const std::vector<env::Action>& actions,
                                        const ParamOptConfig& cfg,
                                        double freeze_threshold,
                                        double trust_radius) {
  cfg.validate();
  if (actions.empty()) {
    throw ContractError("optimize_env_params: need at least one action");
  }
  if (trust_radius <= 0.0) {
    throw ContractError("optimize_env_params: trust_radius must be positive");
  }
  const int n = reg.size();
  if (model.n_params != n) {
    throw ShapeError("optimize_env_params: model has " +
                     std::to_string(model.n_params) + " parameters, registry " +
                     std::to_string(n));
  }
  const Mat psi = causal::expected_graph(model.graph);
  std::vector<bool> frozen(n, false);
  for (int r = 0; r < n; ++r) {
    double row_max = 0.0;
    for (int c = 0; c < psi.cols; ++c) row_max = std::max(row_max, psi(r, c));
    frozen[r] = (row_max < freeze_threshold);
  }

  std::vector<double> u = env::normalize_params(reg, eps);
  const int batch = static_cast<int>(actions.size());

  // Static graph: epsilon enters as n scalar parameters broadcast over the
  // action rows; the transform is the expected graph, held fixed.
  ad::CompGraph g;
  std::vector<double> eps_store = u;
  std::vector<ad::NodeRef> eps_params;
  std::vector<ad::NodeRef> eps_cols;
  Mat ones(batch, 1, 1.0);
  const ad::NodeRef ones_col = g.constant(ones);
  for (int r = 0; r < n; ++r) {
    const ad::NodeRef p = g.param(&eps_store[r], 1, 1);
    eps_params.push_back(p);
    eps_cols.push_back(g.matmul(ones_col, p));
  }
  Mat act(batch, model.action_dim);
  for (int b = 0; b < batch; ++b) {
    if (static_cast<int>(actions[b].v.size()) != model.action_dim) {
      throw ShapeError("optimize_env_params: action width mismatch");
    }
    for (int i = 0; i < model.action_dim; ++i) act(b, i) = actions[b].v[i];
  }
  const ad::NodeRef action_in = g.constant(act);
  const causal::ModelNodes nodes =
      causal::build_causal_net(g, model, eps_cols, action_in, &psi, ad::NodeRef{});
  const ad::NodeRef objective = g.mean(nodes.pred);

  std::vector<double> lo(n), hi(n);
  for (int r = 0; r < n; ++r) {
    lo[r] = std::max(0.0, u[r] - trust_radius);
    hi[r] = std::min(1.0, u[r] + trust_radius);
  }

  for (int step = 0; step < cfg.max_steps; ++step) {
    g.forward();
    if (!std::isfinite(g.value_scalar(objective))) {
      throw NumericError("optimize_env_params: non-finite objective at step " +
                         std::to_string(step));
    }
    g.backward(objective);
    double delta_norm2 = 0.0;
    for (int r = 0; r < n; ++r) {
      if (frozen[r]) continue;
      const double grad = g.grad(eps_params[r])[0];
      if (!std::isfinite(grad)) {
        throw NumericError("optimize_env_params: non-finite gradient on '" +
                           reg.specs[r].name + "'");
      }
      const double next = std::clamp(eps_store[r] - cfg.step * grad, lo[r], hi[r]);
      const double d = next - eps_store[r];
      delta_norm2 += d * d;
      eps_store[r] = next;
    }
    if (std::sqrt(delta_norm2) < cfg.tolerance) break;
  }

  // Frozen entries keep their input values bit-identically.
  env::EnvParamVector out = eps;
  const env::EnvParamVector moved = env::denormalize_params(reg, eps_store);
  for (int r = 0; r < n; ++r) {
    if (!frozen[r]) out[r] = moved[r];
  }
  return out;
}

double compute_mape(const env::ParamRegistry& reg,
                    const env::EnvParamVector& eps,
                    const env::EnvParamVector& target,
                    const std::vector<std::string>& subset) {
  if (subset.empty()) throw ContractError("compute_mape: empty subset");
  if (eps.size() != target.size() ||
      static_cast<int>(eps.size()) != reg.size()) {
    throw ShapeError("compute_mape: size mismatch");
  }
  double acc = 0.0;
  for (const std::string& name : subset) {
    const int i = reg.require(name);
    if (target[i] == 0.0) {
      throw ContractError("compute_mape: target for '" + name +
                          "' is zero; exclude it or use absolute error");
    }
    acc += std::fabs(eps[i] - target[i]) / std::fabs(target[i]);
  }
  return acc / static_cast<double>(subset.size());
}

namespace {

std::vector<std::string> active_param_names(const env::ParamRegistry& reg,
                                            const Mat& psi, double threshold) {
  std::vector<std::string> names;
  for (int r = 0; r < reg.size(); ++r) {
    double row_max = 0.0;
    for (int c = 0; c < psi.cols; ++c) row_max = std::max(row_max, psi(r, c));
    if (row_max >= threshold) names.push_back(reg.specs[r].name);
  }
  return names;
}

RunReport run_loop(const LoopConfig& cfg, const env::EnvParamVector& target,
                   bool dense) {
  cfg.validate();
  const env::ParamRegistry reg = env::default_registry(cfg.env_name);
  env::validate_params(reg, target);
  const uint64_t master = cfg.master_seed;

  // The loop only sees the hidden environment through this capability.
  auto real_rollout = [&reg, &target, &cfg](const env::Action& a, uint64_t seed) {
    return env::rollout(reg, target, a, seed, env::Realism::kReal,
                        cfg.obs_noise_sigma);
  };
  const SimRolloutFn sim_rollout = [&reg](const env::EnvParamVector& e,
                                          const env::Action& a, uint64_t seed) {
    return env::rollout(reg, e, a, seed, env::Realism::kNominal, 0.0);
  };

  // MAPE subset: ground-truth-causal parameters with nonzero targets
  // (percentage error is undefined at zero).
  std::vector<std::string> causal_subset;
  for (int i = 0; i < reg.size(); ++i) {
    if (reg.specs[i].causal && target[i] != 0.0) {
      causal_subset.push_back(reg.specs[i].name);
    }
  }

  RunReport report;
  report.env_name = cfg.env_name;
  report.algorithm = dense ? "dense" : "causal";
  report.factor_names = reg.factor_names;
  for (const auto& s : reg.specs) {
    report.param_names.push_back(s.name);
    report.causal_flags.push_back(s.causal ? 1 : 0);
  }

  env::EnvParamVector eps = env::default_params(reg);
  causal::CausalGraphParams psi = causal::init_graph_params(reg.size(), reg.k);

  for (int iter = 0;; ++iter) {
    std::vector<env::Action> actions;
    std::vector<env::FactorizedTrajectory> real_trajs;
    std::vector<std::vector<double>> diffs;
    for (int nidx = 0; nidx < cfg.n_real; ++nidx) {
      actions.push_back(
          env::scripted_policy_sample(reg, derive_seed(master, "action", iter, nidx)));
      real_trajs.push_back(
          real_rollout(actions.back(), derive_seed(master, "real", iter, nidx)));
      const env::FactorizedTrajectory sim = sim_rollout(
          eps, actions.back(), derive_seed(master, "sim", iter, nidx));
      diffs.push_back(env::trajectory_difference(sim, real_trajs.back()));
    }

    IterationRecord rec;
    rec.iteration = iter;
    rec.eps_raw = eps;
    rec.psi = causal::expected_graph(psi);
    double grand = 0.0;
    for (int k = 0; k < reg.k; ++k) {
      FactorStats st;
      st.mean = 0.0;
      st.min = std::numeric_limits<double>::infinity();
      st.max = -std::numeric_limits<double>::infinity();
      for (const auto& d : diffs) {
        st.mean += d[k];
        st.min = std::min(st.min, d[k]);
        st.max = std::max(st.max, d[k]);
      }
      st.mean /= static_cast<double>(cfg.n_real);
      grand += st.mean;
      rec.diff.push_back(st);
    }
    rec.grand_mean = grand / static_cast<double>(reg.k);
    rec.mape = compute_mape(reg, eps, target, causal_subset);
    rec.active_params =
        active_param_names(reg, rec.psi, cfg.randomization.threshold);
    report.iterations.push_back(std::move(rec));

    if (report.iterations.back().grand_mean <= cfg.stop_threshold) {
      report.status = "converged";
      break;
    }
    if (iter == cfg.max_iter) {
      report.status = "max-iters";
      break;
    }

    // --- adapt ---------------------------------------------------------
    Mat dr_psi = report.iterations.back().psi;
    if (dense) dr_psi.fill(1.0);
    std::vector<std::vector<env::EnvParamVector>> dr_samples;
    for (int nidx = 0; nidx < cfg.n_real; ++nidx) {
      dr_samples.push_back(causality_guided_dr(
          reg, eps, dr_psi, cfg.randomization, derive_seed(master, "dr", iter, nidx)));
    }
    causal::DifferenceDataset ds = build_dataset(
        reg, real_trajs, dr_samples, sim_rollout, derive_seed(master, "dataset", iter));

    causal::TrainingConfig tcfg = cfg.training;
    if (dense) {
      tcfg.sparse_weight = 0.0;
      tcfg.freeze_graph = true;
    } else {
      tcfg.sparse_weight =
          cfg.training.sparse_weight *
          std::pow(cfg.training.sw_discount, static_cast<double>(iter));
    }
    causal::TrainResult tr = causal::train(ds, tcfg, psi, cfg.arch,
                                           derive_seed(master, "train", iter));
    psi = tr.model.graph;
    report.iterations.back().train_loss_final = tr.epoch_loss.back();
    report.iterations.back().dataset = std::move(ds);

    // The surrogate saw data only inside the randomization box around the
    // current eps; confine the update to that box.
    const double freeze_thr = dense ? 0.0 : cfg.randomization.threshold;
    eps = optimize_env_params(reg, eps, tr.model, actions, cfg.param_opt,
                              freeze_thr, cfg.randomization.halfwidth_fraction);
    report.final_model = std::move(tr.model);
    report.has_model = true;
  }
  return report;
}

}  // namespace

RunReport run_discovery(const LoopConfig& cfg, const env::EnvParamVector& target) {
  return run_loop(cfg, target, false);
}

RunReport run_baseline_dense(const LoopConfig& cfg,
                             const env::EnvParamVector& target) {
  return run_loop(cfg, target, true);
}

}  // namespace simcal::loop
