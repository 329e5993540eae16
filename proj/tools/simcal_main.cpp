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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simcal/config.hpp"
#include "simcal/envsim.hpp"
#include "simcal/gradcheck.hpp"
#include "simcal/io_util.hpp"
#include "simcal/kernels.hpp"
#include "simcal/loop.hpp"
#include "simcal/plot.hpp"

namespace {

using namespace simcal;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string env_override;
  int64_t seed_override = -1;
};

io::RunConfig resolve_config(const CommonOpts& o) {
  io::RunConfig cfg =
      o.config_path.empty() ? io::default_run_config() : io::load_config(o.config_path);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (!o.env_override.empty()) cfg.loop.env_name = o.env_override;
  if (o.seed_override >= 0) cfg.loop.master_seed = static_cast<uint64_t>(o.seed_override);
  if (cfg.out_dir.empty()) throw ConfigError("no output directory (--out or out_dir)");
  return cfg;
}

int cmd_discover(const CommonOpts& o, bool dense) {
  const io::RunConfig cfg = resolve_config(o);
  const env::EnvParamVector target = env::target_params(cfg.loop.env_name);
  const loop::RunReport report = dense ? loop::run_baseline_dense(cfg.loop, target)
                                       : loop::run_discovery(cfg.loop, target);
  io::write_run_report(report, cfg.out_dir);
  io::atomic_write_file(
      (std::filesystem::path(cfg.out_dir) / "registry.json").string(),
      io::registry_to_json(env::default_registry(cfg.loop.env_name)).dump(2) +
          "\n");
  const auto& first = report.iterations.front();
  const auto& last = report.iterations.back();
  std::cout << "env=" << report.env_name << " algorithm=" << report.algorithm
            << " status=" << report.status
            << " iterations=" << report.iterations.size()
            << " diff0=" << io::format_double(first.grand_mean)
            << " diff_final=" << io::format_double(last.grand_mean)
            << " mape_final=" << io::format_double(last.mape) << "\n";
  std::cout << "report written to " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_rollout(const std::string& env_name, const std::string& out_file,
                uint64_t seed, bool real) {
  const env::ParamRegistry reg = env::default_registry(env_name);
  const env::EnvParamVector eps =
      real ? env::target_params(env_name) : env::default_params(reg);
  const env::Action a = env::scripted_policy_sample(reg, seed);
  const env::FactorizedTrajectory traj =
      env::rollout(reg, eps, a, seed,
                   real ? env::Realism::kReal : env::Realism::kNominal);
  io::atomic_write_file(out_file, io::trajectory_to_csv(traj, reg.factor_names));
  std::cout << "trajectory written to " << out_file << "\n";
  return kExitOk;
}

int cmd_gradcheck(int trials, double h, uint64_t seed) {
  const double err = gradcheck::grad_check_opset(trials, h, seed);
  std::cout << "kernel backend: " << kern::backend_name(kern::active_backend())
            << "\n";
  std::cout << "max relative error over " << trials
            << " trials: " << io::format_double(err) << "\n";
  return err < 1e-4 ? kExitOk : kExitNumeric;
}

int cmd_ablate_sparsity(const CommonOpts& o, const std::vector<double>& lambdas) {
  io::RunConfig cfg = resolve_config(o);
  const env::EnvParamVector target = env::target_params(cfg.loop.env_name);
  io::CsvTable t;
  t.header = {"lambda", "retained_params", "retained_edges", "final_mean_diff"};
  for (double lam : lambdas) {
    loop::LoopConfig lc = cfg.loop;
    lc.training.sparse_weight = lam;
    const loop::RunReport report = loop::run_discovery(lc, target);
    const Mat& psi = report.iterations.back().psi;
    int rows_kept = 0, edges_kept = 0;
    for (int r = 0; r < psi.rows; ++r) {
      double row_max = 0.0;
      for (int c = 0; c < psi.cols; ++c) {
        row_max = std::max(row_max, psi(r, c));
        if (psi(r, c) >= 0.5) ++edges_kept;
      }
      if (row_max >= 0.5) ++rows_kept;
    }
    t.rows.push_back({io::format_double(lam), std::to_string(rows_kept),
                      std::to_string(edges_kept),
                      io::format_double(report.iterations.back().grand_mean)});
    std::cout << "lambda=" << io::format_double(lam)
              << " retained_params=" << rows_kept
              << " retained_edges=" << edges_kept << "\n";
  }
  io::atomic_write_file(
      (std::filesystem::path(cfg.out_dir) / "sparsity_ablation.csv").string(),
      io::to_csv(t));
  std::cout << "table written to " << cfg.out_dir << "/sparsity_ablation.csv\n";
  return kExitOk;
}

int cmd_ablate_budget(const CommonOpts& o, const std::vector<int>& n_list,
                      const std::vector<int>& m_list,
                      const std::vector<uint64_t>& seeds) {
  io::RunConfig cfg = resolve_config(o);
  const env::EnvParamVector target = env::target_params(cfg.loop.env_name);
  io::CsvTable t;
  t.header = {"seed", "n", "m", "diff_iter0", "diff_final"};
  for (uint64_t seed : seeds) {
    for (int n : n_list) {
      for (int m : m_list) {
        loop::LoopConfig lc = cfg.loop;
        lc.master_seed = seed;
        lc.n_real = n;
        lc.randomization.m_samples = m;
        const loop::RunReport report = loop::run_discovery(lc, target);
        t.rows.push_back({std::to_string(seed), std::to_string(n),
                          std::to_string(m),
                          io::format_double(report.iterations.front().grand_mean),
                          io::format_double(report.iterations.back().grand_mean)});
        std::cout << "seed=" << seed << " n=" << n << " m=" << m << " diff_final="
                  << io::format_double(report.iterations.back().grand_mean)
                  << "\n";
      }
    }
  }
  io::atomic_write_file(
      (std::filesystem::path(cfg.out_dir) / "budget_ablation.csv").string(),
      io::to_csv(t));
  std::cout << "table written to " << cfg.out_dir << "/budget_ablation.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causality-guided simulator parameter identification"};
  app.require_subcommand(1);

  CommonOpts disc_opts, dense_opts, abs_opts, abb_opts;
  std::string roll_env = "air-hockey-2d", roll_out = "trajectory.csv";
  uint64_t roll_seed = 0;
  bool roll_real = false;
  int gc_trials = 100;
  double gc_h = 1e-5;
  uint64_t gc_seed = 12345;
  std::vector<double> lambdas{0.001, 0.005, 0.01};
  std::vector<int> n_list{5, 10, 20};
  std::vector<int> m_list{32, 64, 128};
  std::vector<uint64_t> budget_seeds{1, 2, 3};
  std::string plot_run, plot_out;

  auto add_common = [](CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--env", o.env_override, "environment name override");
    sub->add_option("--seed", o.seed_override, "master seed override");
  };

  CLI::App* disc = app.add_subcommand(
      "discover", "identify hidden environment parameters with the causal loop");
  add_common(disc, disc_opts);
  CLI::App* dense = app.add_subcommand(
      "baseline-dense", "identification loop with a fixed dense graph (ablation)");
  add_common(dense, dense_opts);

  CLI::App* roll = app.add_subcommand("rollout", "single trajectory to CSV");
  roll->add_option("--env", roll_env, "environment name");
  roll->add_option("--out", roll_out, "output CSV path");
  roll->add_option("--seed", roll_seed, "policy/rollout seed");
  roll->add_flag("--real", roll_real, "use the hidden target parameters");

  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "finite-difference audit of the autodiff engine");
  gc->add_option("--trials", gc_trials, "number of random graphs");
  gc->add_option("--fd-step", gc_h, "central-difference step");
  gc->add_option("--seed", gc_seed, "trial seed");

  CLI::App* abs = app.add_subcommand("ablate-sparsity",
                                     "sweep the sparsity weight, count kept edges");
  add_common(abs, abs_opts);
  abs->add_option("--lambdas", lambdas, "sparsity weights to sweep")->delimiter(',');

  CLI::App* abb = app.add_subcommand("ablate-budget",
                                     "sweep rollout budgets N and M");
  add_common(abb, abb_opts);
  abb->add_option("--n-list", n_list, "real rollout counts")->delimiter(',');
  abb->add_option("--m-list", m_list, "sim rollout counts")->delimiter(',');
  abb->add_option("--seeds", budget_seeds, "master seeds")->delimiter(',');

  CLI::App* plot = app.add_subcommand("plot", "render run CSVs to SVG");
  plot->add_option("--run", plot_run, "run directory")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (disc->parsed()) return cmd_discover(disc_opts, false);
    if (dense->parsed()) return cmd_discover(dense_opts, true);
    if (roll->parsed()) return cmd_rollout(roll_env, roll_out, roll_seed, roll_real);
    if (gc->parsed()) return cmd_gradcheck(gc_trials, gc_h, gc_seed);
    if (abs->parsed()) return cmd_ablate_sparsity(abs_opts, lambdas);
    if (abb->parsed()) return cmd_ablate_budget(abb_opts, n_list, m_list, budget_seeds);
    if (plot->parsed()) {
      io::plot_run_dir(plot_run, plot_out);
      std::cout << "plots written to " << plot_out << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
