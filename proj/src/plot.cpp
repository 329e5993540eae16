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

#include "simcal/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "simcal/error.hpp"

namespace simcal::io {

namespace fs = std::filesystem;

namespace {

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string psi_heatmap_svg(const CsvTable& psi) {
  if (psi.header.size() < 2) {
    throw ParseError("psi csv: expected a param column plus factor columns");
  }
  const int n_factors = static_cast<int>(psi.header.size()) - 1;
  const int n_params = static_cast<int>(psi.rows.size());
  const double cell = 14.0;
  const double label_w = 260.0;
  const double top = 40.0;
  const double width = label_w + n_factors * cell + 20.0;
  const double height = top + n_params * cell + 20.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_px(width) +
         "\" height=\"" + fmt_px(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int f = 0; f < n_factors; ++f) {
    svg += "<text x=\"" + fmt_px(label_w + f * cell + cell / 2) + "\" y=\"" +
           fmt_px(top - 8) +
           "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"monospace\">" +
           esc(psi.header[f + 1]) + "</text>\n";
  }
  for (int r = 0; r < n_params; ++r) {
    const auto& row = psi.rows[r];
    svg += "<text x=\"" + fmt_px(label_w - 6) + "\" y=\"" +
           fmt_px(top + r * cell + cell * 0.72) +
           "\" font-size=\"9\" text-anchor=\"end\" font-family=\"monospace\">" +
           esc(row[0]) + "</text>\n";
    for (int f = 0; f < n_factors; ++f) {
      const double v = parse_double(row[f + 1], "psi csv row " + std::to_string(r + 2));
      const double clamped = std::clamp(v, 0.0, 1.0);
      const long shade = std::lround(255.0 * (1.0 - clamped));
      const std::string c = std::to_string(shade);
      svg += "<rect class=\"cell\" x=\"" + fmt_px(label_w + f * cell) + "\" y=\"" +
             fmt_px(top + r * cell) + "\" width=\"" + fmt_px(cell) +
             "\" height=\"" + fmt_px(cell) + "\" fill=\"rgb(" + c + "," + c +
             "," + c + ")\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

void emit_psi_heatmap(const std::string& psi_csv_path,
                      const std::string& out_svg_path) {
  atomic_write_file(out_svg_path, psi_heatmap_svg(read_csv(psi_csv_path)));
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<double>& x,
                           const std::vector<Series>& series) {
  const double w = 640.0, h = 400.0;
  const double ml = 70.0, mr = 150.0, mt = 40.0, mb = 50.0;
  double ymin = 0.0, ymax = 1e-12;
  for (const auto& s : series) {
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  const double xmin = x.empty() ? 0.0 : x.front();
  const double xmax = (x.size() > 1) ? x.back() : xmin + 1.0;
  auto px = [&](double xv) {
    return ml + (xv - xmin) / std::max(1e-12, xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double yv) {
    return h - mb - (yv - ymin) / std::max(1e-12, ymax - ymin) * (h - mt - mb);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_px(w) +
         "\" height=\"" + fmt_px(h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_px(w / 2) + "\" y=\"20\" font-size=\"14\" "
         "text-anchor=\"middle\" font-family=\"monospace\">" + esc(title) +
         "</text>\n";
  svg += "<line x1=\"" + fmt_px(ml) + "\" y1=\"" + fmt_px(h - mb) + "\" x2=\"" +
         fmt_px(w - mr) + "\" y2=\"" + fmt_px(h - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt_px(ml) + "\" y1=\"" + fmt_px(mt) + "\" x2=\"" +
         fmt_px(ml) + "\" y2=\"" + fmt_px(h - mb) + "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double yv = ymin + (ymax - ymin) * tick / 4.0;
    svg += "<text x=\"" + fmt_px(ml - 8) + "\" y=\"" + fmt_px(py(yv) + 3) +
           "\" font-size=\"10\" text-anchor=\"end\" font-family=\"monospace\">" +
           format_double(std::round(yv * 1000.0) / 1000.0) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_px((ml + w - mr) / 2) + "\" y=\"" + fmt_px(h - 12) +
         "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"monospace\">" +
         esc(x_label) + "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 8];
    std::string pts;
    for (size_t i = 0; i < x.size() && i < series[s].y.size(); ++i) {
      if (i) pts += ' ';
      pts += fmt_px(px(x[i])) + "," + fmt_px(py(series[s].y[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    svg += "<text x=\"" + fmt_px(w - mr + 10) + "\" y=\"" +
           fmt_px(mt + 16.0 * s + 10) + "\" font-size=\"10\" fill=\"" + color +
           "\" font-family=\"monospace\">" + esc(series[s].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void plot_run_dir(const std::string& run_dir, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path in(run_dir);
  const fs::path out(out_dir);

  // psi heatmaps, in iteration order
  std::map<int, fs::path> psi_files;
  for (const auto& entry : fs::directory_iterator(in)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("psi_iter_", 0) == 0 && name.size() > 13 &&
        name.substr(name.size() - 4) == ".csv") {
      const int idx = std::stoi(name.substr(9, name.size() - 13));
      psi_files[idx] = entry.path();
    }
  }
  for (const auto& [idx, path] : psi_files) {
    emit_psi_heatmap(path.string(),
                     (out / ("psi_iter_" + std::to_string(idx) + ".svg")).string());
  }

  // trajectory-difference history
  const fs::path diff_csv = in / "traj_diff.csv";
  if (fs::exists(diff_csv)) {
    const CsvTable t = read_csv(diff_csv.string());
    std::map<std::string, Series> by_factor;
    std::vector<double> xs;
    for (const auto& row : t.rows) {
      const double it = parse_double(row[0], "traj_diff iteration");
      if (xs.empty() || xs.back() != it) xs.push_back(it);
      auto& s = by_factor[row[1]];
      s.name = row[1];
      s.y.push_back(parse_double(row[2], "traj_diff mean"));
    }
    std::vector<Series> series;
    for (auto& [name, s] : by_factor) series.push_back(std::move(s));
    atomic_write_file((out / "traj_diff.svg").string(),
                      line_chart_svg("mean trajectory difference", "iteration",
                                     xs, series));
  }

  // parameter history, one chart per parameter that actually moved
  const fs::path eps_csv = in / "epsilon_history.csv";
  if (fs::exists(eps_csv)) {
    const CsvTable t = read_csv(eps_csv.string());
    std::vector<double> xs;
    for (const auto& row : t.rows) {
      xs.push_back(parse_double(row[0], "epsilon_history iteration"));
    }
    std::vector<Series> moved;
    for (size_t c = 1; c < t.header.size(); ++c) {
      Series s;
      s.name = t.header[c];
      for (const auto& row : t.rows) {
        s.y.push_back(parse_double(row[c], "epsilon_history value"));
      }
      bool changed = false;
      for (double v : s.y) changed = changed || (v != s.y.front());
      if (changed) moved.push_back(std::move(s));
    }
    // normalize each moved parameter to its own first value for one chart
    for (auto& s : moved) {
      const double base = s.y.front();
      for (double& v : s.y) v -= base;
    }
    atomic_write_file((out / "epsilon_history.svg").string(),
                      line_chart_svg("parameter drift from start", "iteration",
                                     xs, moved));
  }
}

}  // namespace simcal::io
