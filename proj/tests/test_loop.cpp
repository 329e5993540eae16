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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "simcal/envsim.hpp"
#include "simcal/error.hpp"
#include "simcal/io_util.hpp"
#include "simcal/loop.hpp"
#include "simcal/rng.hpp"

using namespace simcal;
using env::EnvParamVector;
using loop::LoopConfig;
using loop::RandomizationConfig;

namespace {

// fast loop configuration for wiring tests
LoopConfig tiny_cfg(uint64_t seed) {
  LoopConfig cfg;
  cfg.env_name = "air-hockey-2d";
  cfg.max_iter = 1;
  cfg.n_real = 2;
  cfg.master_seed = seed;
  cfg.training.epochs = 40;
  cfg.training.batch = 8;
  cfg.randomization.m_samples = 4;
  cfg.param_opt.max_steps = 10;
  cfg.arch.feature_dim = 8;
  cfg.arch.encoder_hidden = {16};
  cfg.arch.decoder_hidden = {16, 16};
  cfg.arch.action_hidden = {8};
  return cfg;
}

Mat uniform_psi(const env::ParamRegistry& reg, double v) {
  Mat psi(reg.size(), reg.k, v);
  return psi;
}

}  // namespace

TEST_CASE("causality_guided_dr: pruned rows are copied bit-identically") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  Mat psi = uniform_psi(reg, 0.1);
  RandomizationConfig cfg;
  cfg.m_samples = 16;
  const auto samples = loop::causality_guided_dr(reg, eps, psi, cfg, 3);
  REQUIRE(samples.size() == 16);
  for (const auto& s : samples) CHECK(s == eps);
}

TEST_CASE("causality_guided_dr: a fully connected graph randomizes everything") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  const Mat psi = uniform_psi(reg, 0.998);
  RandomizationConfig cfg;
  cfg.m_samples = 8;
  const auto samples = loop::causality_guided_dr(reg, eps, psi, cfg, 7);
  for (int r = 0; r < reg.size(); ++r) {
    bool moved = false;
    for (const auto& s : samples) moved = moved || (s[r] != eps[r]);
    CAPTURE(reg.specs[r].name);
    CHECK(moved);
  }
}

TEST_CASE("causality_guided_dr: box containment and centering (Monte Carlo)") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  EnvParamVector eps = env::default_params(reg);
  const int idx = reg.require("puck1@dyna@damping");
  Mat psi = uniform_psi(reg, 0.1);
  psi(idx, 0) = 0.9;  // only this row is randomized
  RandomizationConfig cfg;
  cfg.m_samples = 10000;
  const double delta =
      cfg.halfwidth_fraction * (reg.specs[idx].max - reg.specs[idx].min);
  const auto samples = loop::causality_guided_dr(reg, eps, psi, cfg, 11);
  double mean = 0.0;
  for (const auto& s : samples) {
    CHECK(s[idx] >= std::max(eps[idx] - delta, reg.specs[idx].min));
    CHECK(s[idx] <= std::min(eps[idx] + delta, reg.specs[idx].max));
    mean += s[idx];
  }
  mean /= cfg.m_samples;
  // interval is interior here, so its center is eps
  CHECK(std::fabs(mean - eps[idx]) <= 0.02 * (2 * delta));
  // determinism
  const auto again = loop::causality_guided_dr(reg, eps, psi, cfg, 11);
  CHECK(again[123][idx] == samples[123][idx]);
}

TEST_CASE("causality_guided_dr: clipping respects the registry bounds") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  EnvParamVector eps = env::default_params(reg);
  const int idx = reg.require("env@camera@bias_x");
  eps[idx] = reg.specs[idx].max;  // box sticks out; samples must clip
  Mat psi = uniform_psi(reg, 0.9);
  RandomizationConfig cfg;
  cfg.m_samples = 200;
  const auto samples = loop::causality_guided_dr(reg, eps, psi, cfg, 13);
  for (const auto& s : samples) CHECK(s[idx] <= reg.specs[idx].max);
}

TEST_CASE("causality_guided_dr: psi shape mismatch is a contract error") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  Mat bad(3, 2, 0.5);
  CHECK_THROWS_AS(
      loop::causality_guided_dr(reg, eps, bad, RandomizationConfig{}, 1),
      ContractError);
}

TEST_CASE("build_dataset: N*M rows in (n, m)-lexicographic order") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  const int tag_idx = reg.require("env@camera@bias_x");
  std::vector<env::FactorizedTrajectory> real;
  std::vector<std::vector<EnvParamVector>> dr;
  const int n_groups = 3, m_per = 5;
  for (int n = 0; n < n_groups; ++n) {
    const env::Action a = env::scripted_policy_sample(reg, 100 + n);
    real.push_back(env::rollout(reg, eps, a, n, env::Realism::kReal));
    std::vector<EnvParamVector> group;
    for (int m = 0; m < m_per; ++m) {
      EnvParamVector e = eps;
      // unique marker per (n, m) to verify ordering
      e[tag_idx] = -0.04 + 0.005 * (n * m_per + m);
      group.push_back(e);
    }
    dr.push_back(group);
  }
  const auto sim = [&](const EnvParamVector& e, const env::Action& a,
                       uint64_t seed) {
    return env::rollout(reg, e, a, seed, env::Realism::kNominal);
  };
  const causal::DifferenceDataset ds = loop::build_dataset(reg, real, dr, sim, 5);
  CHECK(ds.rows == n_groups * m_per);
  CHECK(ds.n_params == reg.size());
  CHECK(ds.k == reg.k);
  for (int row = 0; row < ds.rows; ++row) {
    const double marker = -0.04 + 0.005 * row;
    const double norm = (marker - reg.specs[tag_idx].min) /
                        (reg.specs[tag_idx].max - reg.specs[tag_idx].min);
    CHECK(ds.eps[row * ds.n_params + tag_idx] == doctest::Approx(norm).epsilon(1e-12));
    // the action stored with the row is the group's real action
    const int group = row / m_per;
    CHECK(ds.actions[row * ds.action_dim] == real[group].action.v[0]);
  }
}

TEST_CASE("build_dataset: matched parameters give zero difference") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector target = env::target_params("air-hockey-2d");
  const env::Action a = env::scripted_policy_sample(reg, 21);
  std::vector<env::FactorizedTrajectory> real{
      env::rollout(reg, target, a, 0, env::Realism::kReal, 0.0)};
  std::vector<std::vector<EnvParamVector>> dr{{target}};
  const auto sim = [&](const EnvParamVector& e, const env::Action& act,
                       uint64_t seed) {
    return env::rollout(reg, e, act, seed, env::Realism::kNominal);
  };
  const causal::DifferenceDataset ds = loop::build_dataset(reg, real, dr, sim, 5);
  REQUIRE(ds.rows == 1);
  for (int i = 0; i < ds.k; ++i) CHECK(ds.d[i] <= 1e-9);
}

TEST_CASE("build_dataset: single pair composes with trajectory_difference") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  EnvParamVector other = eps;
  other[reg.require("pusher@actuation@vel_discount")] = 0.9;
  const env::Action a = env::scripted_policy_sample(reg, 33);
  const auto real_traj = env::rollout(reg, eps, a, 0, env::Realism::kReal);
  const auto sim = [&](const EnvParamVector& e, const env::Action& act,
                       uint64_t seed) {
    return env::rollout(reg, e, act, seed, env::Realism::kNominal);
  };
  const causal::DifferenceDataset ds =
      loop::build_dataset(reg, {real_traj}, {{other}}, sim, 5);
  const auto expect = env::trajectory_difference(
      env::rollout(reg, other, a, 0, env::Realism::kNominal), real_traj);
  REQUIRE(ds.rows == 1);
  for (int i = 0; i < ds.k; ++i) CHECK(ds.d[i] == expect[i]);
}

TEST_CASE("build_dataset: domain errors carry the (n, m) pair") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  EnvParamVector bad = eps;
  bad[0] = 99.0;
  const env::Action a = env::scripted_policy_sample(reg, 1);
  const auto real_traj = env::rollout(reg, eps, a, 0, env::Realism::kReal);
  const auto sim = [&](const EnvParamVector& e, const env::Action& act,
                       uint64_t seed) {
    return env::rollout(reg, e, act, seed, env::Realism::kNominal);
  };
  try {
    loop::build_dataset(reg, {real_traj, real_traj}, {{eps}, {eps, bad}}, sim, 5);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("n=1") != std::string::npos);
    CHECK(msg.find("m=1") != std::string::npos);
  }
}

TEST_CASE("optimize_env_params: pruned rows are frozen bit-identically") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector eps = env::default_params(reg);
  causal::ModelArch arch;
  arch.feature_dim = 8;
  arch.encoder_hidden = {16};
  arch.decoder_hidden = {16};
  arch.action_hidden = {8};
  causal::CausalGraphParams psi = causal::init_graph_params(reg.size(), reg.k);
  psi.logits.fill(-8.0);  // everything below threshold: all rows frozen
  const causal::CausalModel model = causal::make_causal_model(
      reg.size(), reg.k, reg.action_dim, arch, 3, std::move(psi));
  const std::vector<env::Action> actions{env::scripted_policy_sample(reg, 1)};
  loop::ParamOptConfig cfg;
  cfg.max_steps = 25;
  const EnvParamVector out =
      loop::optimize_env_params(reg, eps, model, actions, cfg, 0.5);
  CHECK(out == eps);
}

TEST_CASE("optimize_env_params: recovers the minimum of a learned bowl") {
  // plant a convex target in a 3-parameter registry slice and check the
  // optimizer walks to it through the trained surrogate
  const int n = 3;
  Rng rng(5);
  causal::DifferenceDataset ds;
  for (int r = 0; r < 512; ++r) {
    std::vector<double> eps(n), act(1, 0.5), d(1);
    for (auto& v : eps) v = rng.uniform01();
    double q = 0.0;
    for (double v : eps) q += (v - 0.6) * (v - 0.6);
    d[0] = 2.0 * q + 0.05;
    ds.add_row(eps, act, d);
  }
  causal::TrainingConfig tcfg;
  tcfg.epochs = 900;
  tcfg.batch = 64;
  tcfg.sparse_weight = 0.0;
  causal::ModelArch arch;
  arch.feature_dim = 16;
  arch.encoder_hidden = {32};
  arch.decoder_hidden = {64, 64};
  arch.action_hidden = {8};
  const causal::TrainResult tr =
      causal::train(ds, tcfg, causal::init_graph_params(n, 1), arch, 7);

  // a synthetic registry over [0, 1] so normalized == raw
  env::ParamRegistry reg;
  reg.env_name = "synthetic";
  reg.k = 1;
  reg.action_dim = 1;
  reg.horizon = 1;
  reg.dt = 1.0;
  for (int i = 0; i < n; ++i) {
    reg.specs.push_back({"p@dyna@x" + std::to_string(i), 0.0, 1.0, 0.2, true});
  }
  reg.factor_names = {"f"};
  reg.action_low = {0.0};
  reg.action_high = {1.0};

  EnvParamVector start(n, 0.2);
  std::vector<env::Action> actions{env::Action{{0.5}}};
  loop::ParamOptConfig cfg;
  cfg.step = 0.05;
  cfg.max_steps = 200;
  const EnvParamVector out =
      loop::optimize_env_params(reg, start, tr.model, actions, cfg, 0.5);
  for (int i = 0; i < n; ++i) {
    CHECK(std::fabs(out[i] - 0.6) < 0.05);
  }
}

TEST_CASE("optimize_env_params: empty action set is a contract error") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  causal::ModelArch arch;
  arch.feature_dim = 8;
  arch.encoder_hidden = {8};
  arch.decoder_hidden = {8};
  arch.action_hidden = {8};
  const causal::CausalModel model = causal::make_causal_model(
      reg.size(), reg.k, reg.action_dim, arch, 3,
      causal::init_graph_params(reg.size(), reg.k));
  CHECK_THROWS_AS(loop::optimize_env_params(reg, env::default_params(reg), model,
                                            {}, loop::ParamOptConfig{}, 0.5),
                  ContractError);
}

TEST_CASE("compute_mape") {
  const env::ParamRegistry reg = env::default_registry("air-hockey-2d");
  const EnvParamVector target = env::target_params("air-hockey-2d");
  CHECK(loop::compute_mape(reg, target, target,
                           {"pusher@actuation@vel_discount"}) == 0.0);
  EnvParamVector eps = target;
  eps[reg.require("pusher@actuation@vel_discount")] = 0.75;
  const double one = loop::compute_mape(reg, eps, target,
                                        {"pusher@actuation@vel_discount"});
  CHECK(one == doctest::Approx(std::fabs(0.75 - 0.85) / 0.85).epsilon(1e-12));
  CHECK(std::fabs(one - 0.1176) < 1e-4);

  // mean of per-parameter errors 0.2 and 0.4 is 0.3
  EnvParamVector t2 = target;
  EnvParamVector e2 = target;
  const int i1 = reg.require("puck1@dyna@friction_sliding");
  const int i2 = reg.require("puck2@dyna@friction_sliding");
  t2[i1] = 0.05;
  e2[i1] = 0.05 * 1.2;
  t2[i2] = 0.05;
  e2[i2] = 0.05 * 1.4;
  CHECK(loop::compute_mape(reg, e2, t2,
                           {"puck1@dyna@friction_sliding",
                            "puck2@dyna@friction_sliding"}) ==
        doctest::Approx(0.3).epsilon(1e-9));

  CHECK_THROWS_AS(loop::compute_mape(reg, eps, target, {}), ContractError);
  EnvParamVector zt = target;
  zt[reg.require("env@camera@bias_x")] = 0.0;
  CHECK_THROWS_AS(loop::compute_mape(reg, eps, zt, {"env@camera@bias_x"}),
                  ContractError);
}

TEST_CASE("run_discovery: a generous stop threshold halts after iteration 0") {
  LoopConfig cfg = tiny_cfg(4);
  cfg.stop_threshold = 1e9;
  const loop::RunReport rep =
      loop::run_discovery(cfg, env::target_params(cfg.env_name));
  CHECK(rep.status == "converged");
  CHECK(rep.iterations.size() == 1);
  CHECK(rep.iterations[0].train_loss_final == -1.0);
}

TEST_CASE("run_discovery: no gap means immediate convergence") {
  LoopConfig cfg = tiny_cfg(4);
  cfg.stop_threshold = 1e-6;
  const env::ParamRegistry reg = env::default_registry(cfg.env_name);
  const loop::RunReport rep = loop::run_discovery(cfg, env::default_params(reg));
  CHECK(rep.status == "converged");
  CHECK(rep.iterations.size() == 1);
  CHECK(rep.iterations[0].grand_mean <= 1e-9);
  CHECK(rep.iterations[0].mape == 0.0);
}

TEST_CASE("baseline keeps the full registry active and matches iteration 0") {
  LoopConfig cfg = tiny_cfg(9);
  cfg.max_iter = 2;
  const EnvParamVector target = env::target_params(cfg.env_name);
  const loop::RunReport dense = loop::run_baseline_dense(cfg, target);
  CHECK(dense.algorithm == "dense");
  for (const auto& rec : dense.iterations) {
    CHECK(rec.active_params.size() == dense.param_names.size());
  }
  const loop::RunReport causal_rep = loop::run_discovery(cfg, target);
  // identical seeds: iteration-0 measurements agree exactly
  CHECK(dense.iterations[0].grand_mean == causal_rep.iterations[0].grand_mean);
  CHECK(dense.iterations[0].mape == causal_rep.iterations[0].mape);
  CHECK(dense.iterations[0].eps_raw == causal_rep.iterations[0].eps_raw);
}

TEST_CASE("run reports are byte-identical across repeated runs") {
  namespace fs = std::filesystem;
  LoopConfig cfg = tiny_cfg(11);
  cfg.max_iter = 1;
  const EnvParamVector target = env::target_params(cfg.env_name);
  const loop::RunReport r1 = loop::run_discovery(cfg, target);
  const loop::RunReport r2 = loop::run_discovery(cfg, target);
  const fs::path base = fs::temp_directory_path() / "simcal_loop_repro";
  fs::remove_all(base);
  io::write_run_report(r1, (base / "a").string());
  io::write_run_report(r2, (base / "b").string());
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    const fs::path other = base / "b" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(io::read_file(entry.path().string()) == io::read_file(other.string()));
    ++compared;
  }
  CHECK(compared >= 4);
  fs::remove_all(base);
}

TEST_CASE("loop config validation") {
  LoopConfig cfg = tiny_cfg(1);
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_cfg(1);
  cfg.randomization.threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_cfg(1);
  cfg.param_opt.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_cfg(1);
  cfg.training.sw_discount = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
