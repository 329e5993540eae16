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

#include "simcal/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "simcal/error.hpp"

namespace simcal::io {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& prefix) {
  if (!j.is_object()) {
    throw ConfigError("config: '" + (prefix.empty() ? "<root>" : prefix) +
                      "' must be an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config: unknown key '" + prefix + it.key() + "'");
    }
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: bad value type for '") + key + "'");
    }
  }
}

void wrap_validate(const char* section, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + section + ": " + e.what());
  }
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  reject_unknown(j,
                 {"env", "seed", "max_iter", "n_real", "stop_threshold",
                  "obs_noise_sigma", "out_dir", "training", "model",
                  "randomization", "param_opt"},
                 "");
  take(j, "env", cfg.loop.env_name);
  take(j, "seed", cfg.loop.master_seed);
  take(j, "max_iter", cfg.loop.max_iter);
  take(j, "n_real", cfg.loop.n_real);
  take(j, "stop_threshold", cfg.loop.stop_threshold);
  take(j, "obs_noise_sigma", cfg.loop.obs_noise_sigma);
  take(j, "out_dir", cfg.out_dir);

  if (j.contains("training")) {
    const json& t = j.at("training");
    reject_unknown(t,
                   {"sparse_weight", "sw_discount", "p_norm", "epochs",
                    "batch_size", "learning_rate", "temperature"},
                   "training.");
    auto& tc = cfg.loop.training;
    take(t, "sparse_weight", tc.sparse_weight);
    take(t, "sw_discount", tc.sw_discount);
    take(t, "p_norm", tc.p_norm);
    take(t, "epochs", tc.epochs);
    take(t, "batch_size", tc.batch);
    take(t, "learning_rate", tc.learning_rate);
    take(t, "temperature", tc.temperature);
    wrap_validate("training", [&] { tc.validate(); });
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m,
                   {"feature_dim", "encoder_hidden", "decoder_hidden",
                    "action_hidden", "activation"},
                   "model.");
    auto& arch = cfg.loop.arch;
    take(m, "feature_dim", arch.feature_dim);
    take(m, "encoder_hidden", arch.encoder_hidden);
    take(m, "decoder_hidden", arch.decoder_hidden);
    take(m, "action_hidden", arch.action_hidden);
    if (m.contains("activation")) {
      arch.activation =
          nn::activation_from_string(m.at("activation").get<std::string>());
    }
    if (arch.feature_dim <= 0) {
      throw ConfigError("config: model.feature_dim must be positive");
    }
    for (int h : arch.encoder_hidden) {
      if (h <= 0) throw ConfigError("config: model.encoder_hidden entries must be positive");
    }
    for (int h : arch.decoder_hidden) {
      if (h <= 0) throw ConfigError("config: model.decoder_hidden entries must be positive");
    }
    for (int h : arch.action_hidden) {
      if (h <= 0) throw ConfigError("config: model.action_hidden entries must be positive");
    }
  }
  if (j.contains("randomization")) {
    const json& r = j.at("randomization");
    reject_unknown(r, {"threshold", "halfwidth_fraction", "m_samples"},
                   "randomization.");
    auto& rc = cfg.loop.randomization;
    take(r, "threshold", rc.threshold);
    take(r, "halfwidth_fraction", rc.halfwidth_fraction);
    take(r, "m_samples", rc.m_samples);
    wrap_validate("randomization", [&] { rc.validate(); });
  }
  if (j.contains("param_opt")) {
    const json& p = j.at("param_opt");
    reject_unknown(p, {"step", "max_steps", "tolerance"}, "param_opt.");
    auto& pc = cfg.loop.param_opt;
    take(p, "step", pc.step);
    take(p, "max_steps", pc.max_steps);
    take(p, "tolerance", pc.tolerance);
    wrap_validate("param_opt", [&] { pc.validate(); });
  }
  wrap_validate("loop", [&] { cfg.loop.validate(); });
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  json j;
  j["env"] = cfg.loop.env_name;
  j["seed"] = cfg.loop.master_seed;
  j["max_iter"] = cfg.loop.max_iter;
  j["n_real"] = cfg.loop.n_real;
  j["stop_threshold"] = cfg.loop.stop_threshold;
  j["obs_noise_sigma"] = cfg.loop.obs_noise_sigma;
  if (!cfg.out_dir.empty()) j["out_dir"] = cfg.out_dir;
  j["training"] = {{"sparse_weight", cfg.loop.training.sparse_weight},
                   {"sw_discount", cfg.loop.training.sw_discount},
                   {"p_norm", cfg.loop.training.p_norm},
                   {"epochs", cfg.loop.training.epochs},
                   {"batch_size", cfg.loop.training.batch},
                   {"learning_rate", cfg.loop.training.learning_rate},
                   {"temperature", cfg.loop.training.temperature}};
  j["model"] = {{"feature_dim", cfg.loop.arch.feature_dim},
                {"encoder_hidden", cfg.loop.arch.encoder_hidden},
                {"decoder_hidden", cfg.loop.arch.decoder_hidden},
                {"action_hidden", cfg.loop.arch.action_hidden},
                {"activation", nn::activation_to_string(cfg.loop.arch.activation)}};
  j["randomization"] = {{"threshold", cfg.loop.randomization.threshold},
                        {"halfwidth_fraction", cfg.loop.randomization.halfwidth_fraction},
                        {"m_samples", cfg.loop.randomization.m_samples}};
  j["param_opt"] = {{"step", cfg.loop.param_opt.step},
                    {"max_steps", cfg.loop.param_opt.max_steps},
                    {"tolerance", cfg.loop.param_opt.tolerance}};
  return j;
}

}  // namespace simcal::io
