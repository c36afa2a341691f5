/*
 Copyright 2026 The SGOPT Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgopt/experiments.hpp"

namespace sgopt::app {

namespace {

std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string csv_header() {
  return "experiment,n,m,t,ordering,solver,cost,runtime_s,build_s,max_p1,max_p2,max_violation,status";
}

std::string to_csv_row(const ExperimentRecord& r) {
  std::ostringstream out;
  out << r.experiment << ',' << r.n << ',' << r.m << ',' << r.t << ',' << r.ordering << ',' << r.solver << ','
      << fmt(r.cost) << ',' << fmt(r.runtime_s, "%.6e") << ',' << fmt(r.build_s, "%.6e") << ',' << r.max_p1 << ','
      << r.max_p2 << ',' << fmt(r.max_violation, "%.3e") << ',' << r.status;
  return out.str();
}

void write_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records) {
  auto out = open_out(path);
  out << csv_header() << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<ExperimentRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != csv_header()) throw std::runtime_error("unexpected CSV header in " + path.string());
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) f.push_back(cell);
    if (f.size() != 13) throw std::runtime_error("malformed CSV row: " + line);
    ExperimentRecord r;
    r.experiment = f[0];
    r.n = std::stoi(f[1]);
    r.m = std::stoi(f[2]);
    r.t = std::stoi(f[3]);
    r.ordering = f[4];
    r.solver = f[5];
    r.cost = std::stod(f[6]);
    r.runtime_s = std::stod(f[7]);
    r.build_s = std::stod(f[8]);
    r.max_p1 = std::stoul(f[9]);
    r.max_p2 = std::stoul(f[10]);
    r.max_violation = std::stod(f[11]);
    r.status = f[12];
    out.push_back(std::move(r));
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const ProblemConfig& config,
                          const Trajectory& trajectory) {
  const int n = config.bodies;
  const int m = static_cast<int>(trajectory.controls.cols());
  auto out = open_out(path);
  out << 't';
  for (int j = 0; j < n; ++j) out << ",theta_" << j;
  for (int a = 0; a < m; ++a) out << ",u_" << a;
  out << '\n';
  for (int t = 0; t < trajectory.horizon(); ++t) {
    out << t;
    for (int j = 0; j < n; ++j) out << ',' << fmt(trajectory.states(t, pendulum_offset(n, j)));
    for (int a = 0; a < m; ++a) {
      out << ',';
      if (t < trajectory.controls.rows()) out << fmt(trajectory.controls(t, a));
    }
    out << '\n';
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  const double denom = k * sxx - sx * sx;
  if (k < 2 || denom <= 0) return std::numeric_limits<double>::quiet_NaN();
  return (k * sxy - sx * sy) / denom;
}

std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series) {
  constexpr double width = 640, height = 420, left = 80, right = 160, top = 40, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(spec.title)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Five ticks per axis, labelled in data units.
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double vx = spec.log_x ? std::pow(10.0, fx) : fx;
    const double vy = spec.log_y ? std::pow(10.0, fy) : fy;
    const double sx = left + pw * i / 4.0;
    const double sy = top + ph - ph * i / 4.0;
    out << "<line x1=\"" << sx << "\" y1=\"" << top + ph << "\" x2=\"" << sx << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << sx << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(vx, "%.3g")
        << "</text>\n";
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << sy << "\" x2=\"" << left << "\" y2=\"" << sy
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << fmt(vy, "%.3g")
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << xml_escape(spec.x_label) << (spec.log_x ? " (log)" : "") << "</text>\n";
  out << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(spec.y_label) << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) out << fmt(px(s.x[i]), "%.2f") << ',' << fmt(py(s.y[i]), "%.2f") << ' ';
    out << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(k) + 10;
    out << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace sgopt::app
