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

#include "simcal/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "simcal/causal_model.hpp"
#include "simcal/error.hpp"

namespace simcal::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ParseError(context + ": not a number: '" + s + "'");
  }
  return v;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw ConfigError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  emit_row(t.header);
  for (const auto& r : t.rows) emit_row(r);
  return out;
}

CsvTable read_csv_string(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (lineno == 1) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) {
        throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                         std::to_string(t.header.size()) + " cells, got " +
                         std::to_string(cells.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ParseError("csv line 1: missing header");
  return t;
}

CsvTable read_csv(const std::string& path) {
  try {
    return read_csv_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string psi_to_csv(const Mat& psi, const std::vector<std::string>& param_names,
                       const std::vector<std::string>& factor_names) {
  if (psi.rows != static_cast<int>(param_names.size()) ||
      psi.cols != static_cast<int>(factor_names.size())) {
    throw ShapeError("psi_to_csv: name counts do not match the matrix");
  }
  CsvTable t;
  t.header.push_back("param");
  for (const auto& f : factor_names) t.header.push_back(f);
  for (int r = 0; r < psi.rows; ++r) {
    std::vector<std::string> row{param_names[r]};
    for (int c = 0; c < psi.cols; ++c) row.push_back(format_double(psi(r, c)));
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

std::string trajectory_to_csv(const env::FactorizedTrajectory& traj,
                              const std::vector<std::string>& factor_names) {
  if (traj.factors.size() != factor_names.size()) {
    throw ShapeError("trajectory_to_csv: factor name count mismatch");
  }
  CsvTable t;
  t.header.push_back("t");
  for (const auto& f : factor_names) {
    t.header.push_back("x_" + f);
    t.header.push_back("y_" + f);
  }
  const size_t steps = traj.factors.empty() ? 0 : traj.factors[0].size();
  for (size_t i = 0; i < steps; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (const auto& f : traj.factors) {
      row.push_back(format_double(f[i].x));
      row.push_back(format_double(f[i].y));
    }
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

nlohmann::json registry_to_json(const env::ParamRegistry& reg) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& s : reg.specs) {
    params.push_back({{"name", s.name},
                      {"min", s.min},
                      {"max", s.max},
                      {"default", s.def},
                      {"causal", s.causal}});
  }
  return {{"env", reg.env_name},
          {"k", reg.k},
          {"action_dim", reg.action_dim},
          {"horizon", reg.horizon},
          {"dt", reg.dt},
          {"factors", reg.factor_names},
          {"params", std::move(params)}};
}

void write_run_report(const loop::RunReport& report, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path base(dir);

  nlohmann::json j;
  j["env"] = report.env_name;
  j["algorithm"] = report.algorithm;
  j["status"] = report.status;
  j["factors"] = report.factor_names;
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& rec : report.iterations) {
    nlohmann::json ji;
    ji["iteration"] = rec.iteration;
    ji["grand_mean_diff"] = rec.grand_mean;
    ji["mape_causal"] = rec.mape;
    if (rec.train_loss_final >= 0.0) ji["train_loss_final"] = rec.train_loss_final;
    ji["active_params"] = rec.active_params;
    nlohmann::json eps = nlohmann::json::array();
    for (double v : rec.eps_raw) eps.push_back(v);
    ji["eps"] = std::move(eps);
    nlohmann::json diffs = nlohmann::json::array();
    for (size_t k = 0; k < rec.diff.size(); ++k) {
      diffs.push_back({{"factor", report.factor_names[k]},
                       {"mean", rec.diff[k].mean},
                       {"min", rec.diff[k].min},
                       {"max", rec.diff[k].max}});
    }
    ji["diff"] = std::move(diffs);
    iters.push_back(std::move(ji));
  }
  j["iterations"] = std::move(iters);
  atomic_write_file((base / "report.json").string(), j.dump(2) + "\n");

  if (report.has_model) {
    atomic_write_file((base / "model.json").string(),
                      causal::model_to_json(report.final_model).dump() + "\n");
  }

  {
    CsvTable t;
    t.header.push_back("iteration");
    for (const auto& n : report.param_names) t.header.push_back(n);
    for (const auto& rec : report.iterations) {
      std::vector<std::string> row{std::to_string(rec.iteration)};
      for (double v : rec.eps_raw) row.push_back(format_double(v));
      t.rows.push_back(std::move(row));
    }
    atomic_write_file((base / "epsilon_history.csv").string(), to_csv(t));
  }
  {
    CsvTable t;
    t.header = {"iteration", "factor", "mean", "min", "max"};
    for (const auto& rec : report.iterations) {
      for (size_t k = 0; k < rec.diff.size(); ++k) {
        t.rows.push_back({std::to_string(rec.iteration), report.factor_names[k],
                          format_double(rec.diff[k].mean),
                          format_double(rec.diff[k].min),
                          format_double(rec.diff[k].max)});
      }
    }
    atomic_write_file((base / "traj_diff.csv").string(), to_csv(t));
  }
  for (const auto& rec : report.iterations) {
    atomic_write_file(
        (base / ("psi_iter_" + std::to_string(rec.iteration) + ".csv")).string(),
        psi_to_csv(rec.psi, report.param_names, report.factor_names));
    if (rec.dataset.rows > 0) {
      std::string out;
      const auto& ds = rec.dataset;
      for (int r = 0; r < ds.rows; ++r) {
        nlohmann::json row;
        nlohmann::json eps = nlohmann::json::array();
        for (int i = 0; i < ds.n_params; ++i) {
          eps.push_back(ds.eps[static_cast<size_t>(r) * ds.n_params + i]);
        }
        nlohmann::json act = nlohmann::json::array();
        for (int i = 0; i < ds.action_dim; ++i) {
          act.push_back(ds.actions[static_cast<size_t>(r) * ds.action_dim + i]);
        }
        nlohmann::json dv = nlohmann::json::array();
        for (int i = 0; i < ds.k; ++i) {
          dv.push_back(ds.d[static_cast<size_t>(r) * ds.k + i]);
        }
        row["eps"] = std::move(eps);
        row["action"] = std::move(act);
        row["d"] = std::move(dv);
        out += row.dump();
        out += '\n';
      }
      atomic_write_file(
          (base / ("dataset_iter_" + std::to_string(rec.iteration) + ".jsonl"))
              .string(),
          out);
    }
  }
}

}  // namespace simcal::io
