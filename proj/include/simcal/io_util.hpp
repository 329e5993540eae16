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

#ifndef SIMCAL_IO_UTIL_HPP_
#define SIMCAL_IO_UTIL_HPP_

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "simcal/envsim.hpp"
#include "simcal/loop.hpp"
#include "simcal/mat.hpp"

namespace simcal::io {

// Shortest representation that round-trips exactly.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

// write-temp-then-rename
void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& t);
CsvTable read_csv_string(const std::string& text);  // ParseError with line number
CsvTable read_csv(const std::string& path);

std::string psi_to_csv(const Mat& psi, const std::vector<std::string>& param_names,
                       const std::vector<std::string>& factor_names);

std::string trajectory_to_csv(const env::FactorizedTrajectory& traj,
                              const std::vector<std::string>& factor_names);

nlohmann::json registry_to_json(const env::ParamRegistry& reg);

// report.json, epsilon_history.csv, traj_diff.csv, psi_iter_<i>.csv and
// dataset_iter_<i>.jsonl under dir (created if needed).
void write_run_report(const loop::RunReport& report, const std::string& dir);

}  // namespace simcal::io

#endif  // SIMCAL_IO_UTIL_HPP_
