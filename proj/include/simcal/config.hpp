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

#ifndef SIMCAL_CONFIG_HPP_
#define SIMCAL_CONFIG_HPP_

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "simcal/loop.hpp"

namespace simcal::io {

struct RunConfig {
  loop::LoopConfig loop;
  std::string out_dir;
};

RunConfig default_run_config();

// Missing fields take the defaults; unknown keys and constraint violations
// raise ConfigError with the offending field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace simcal::io

#endif  // SIMCAL_CONFIG_HPP_
