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
// Dependency-free SVG rendering of run artifacts. Pure functions of their
// inputs: identical inputs produce byte-identical SVG.

#ifndef SIMCAL_PLOT_HPP_
#define SIMCAL_PLOT_HPP_

#include <string>
#include <vector>

#include "simcal/io_util.hpp"

namespace simcal::io {

// Grid of cells, one per (parameter, factor); darkness proportional to the
// value: 0 renders white, 1 renders black.
std::string psi_heatmap_svg(const CsvTable& psi);
void emit_psi_heatmap(const std::string& psi_csv_path,
                      const std::string& out_svg_path);

struct Series {
  std::string name;
  std::vector<double> y;
};

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<double>& x,
                           const std::vector<Series>& series);

// Renders every psi_iter_*.csv plus trajectory-difference and parameter
// histories found in a run directory.
void plot_run_dir(const std::string& run_dir, const std::string& out_dir);

}  // namespace simcal::io

#endif  // SIMCAL_PLOT_HPP_
