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

#pragma once

/**
 * @file
 * @brief Experiment drivers behind the command-line tool: config loading, CSV and
 * SVG writers, and the validate / scale / swingup commands.
 */

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgopt/cartpole.hpp"
#include "sgopt/solvers.hpp"

namespace sgopt::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Named initial state, resolved once the number of carts is known.
struct StatePreset {
  bool hanging = false;
  double upright_degrees = 0.0;

  Eigen::VectorXd state(int bodies) const;
};

/// Everything a run needs: the OCP and the physical parameters. When `preset` is
/// set, problem.x0 was generated from it.
struct RunConfig {
  ProblemConfig problem;
  CartPoleParams params;
  std::optional<StatePreset> preset;
};

/// Validation defaults: 3 carts, 2 actuators, 150 steps, 1.15 degree tilt.
RunConfig default_validate_config();
/// Swing-up defaults: 5 carts, 2 actuators, 50 steps, hanging start.
RunConfig default_swingup_config();

/**
 * @brief Overlays a JSON document on `defaults`.
 *
 * Recognized keys: n, actuation {m | rho}, horizon, dt, masses {cart, pendulum},
 * length, spring, damping, gravity, weights {qx, qtheta, qu, qxf, qthetaf}, actuators,
 * and either x0 (4N numbers) or preset ({"upright_perturbed": degrees} or "hanging").
 * Unknown keys and wrong types throw SolverError(InvalidConfig). When n changes and
 * no initial state is given, the preset of the defaults is rebuilt for the new size.
 */
RunConfig parse_config(const std::string& json_text, const RunConfig& defaults);
RunConfig load_config(const std::filesystem::path& path, const RunConfig& defaults);

/// "a:b:step" (inclusive, tolerant to rounding) or a comma-separated list.
std::vector<double> parse_range(const std::string& text);

enum class OrderingKind { Structured, MinDegree, MinFill };
std::string to_string(OrderingKind kind);
OrderingKind parse_ordering(const std::string& text);
Ordering make_ordering(OrderingKind kind, const ProblemConfig& config, const FactorGraph& graph);

/// One CSV row of an experiment.
struct ExperimentRecord {
  std::string experiment;
  int n = 0;
  int m = 0;
  int t = 0;
  std::string ordering;  ///< structured, mindegree, minfill or none (Riccati)
  std::string solver;    ///< sgopt or riccati
  double cost = 0.0;
  double runtime_s = 0.0;
  double build_s = 0.0;
  std::size_t max_p1 = 0;
  std::size_t max_p2 = 0;
  double max_violation = 0.0;
  std::string status = "ok";  ///< ok or error:<kind>
};

std::string csv_header();
std::string to_csv_row(const ExperimentRecord& record);
void write_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records);
/// Parses a file written by write_records.
std::vector<ExperimentRecord> read_records(const std::filesystem::path& path);

/// t, theta per pendulum, u per actuator. The last row has empty control cells.
void write_trajectory_csv(const std::filesystem::path& path, const ProblemConfig& config,
                          const Trajectory& trajectory);

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Standalone SVG line chart. Non-positive values are skipped on log axes.
std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series);

/// Least-squares slope of log(y) against log(x) over positive pairs.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Median wall time of `repetitions` calls of `fn`, in seconds.
template <typename Fn>
double median_seconds(int repetitions, Fn&& fn);

// ---------------------------------------------------------------------------
// Experiment runners (usable without the CLI)
// ---------------------------------------------------------------------------

struct SolveTiming {
  int repetitions = 5;
};

/// Builds the linear OCP, orders it and solves it `repetitions` times.
ExperimentRecord run_sgopt(const std::string& experiment, const RunConfig& run, OrderingKind ordering,
                           const SolveTiming& timing = {}, SolveResult* result_out = nullptr);
/// Dense Riccati baseline on the same linear model.
ExperimentRecord run_riccati(const std::string& experiment, const RunConfig& run, const SolveTiming& timing = {},
                             RiccatiResult* result_out = nullptr);

enum class ScaleMode { N, Rho };

struct ScaleRequest {
  ScaleMode mode = ScaleMode::N;
  std::vector<double> points;
  /// rho for mode N (default 0.25); N for mode Rho (default 30).
  std::optional<double> fixed;
  int horizon = 10;
  std::vector<OrderingKind> orderings{OrderingKind::Structured, OrderingKind::MinDegree};
  bool include_riccati = true;
  SolveTiming timing;
  /// Worker threads; 0 picks the hardware concurrency capped by SGOPT_THREADS.
  unsigned threads = 0;
  CartPoleParams params;
  CostWeights weights;
};

/// Runs every point of a sweep. Failures become rows with status error:<kind>.
std::vector<ExperimentRecord> run_scale(const ScaleRequest& request);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = ".";
  std::optional<OrderingKind> ordering;
  std::optional<long> seed;
};

int cmd_validate(const CommonOptions& options, std::ostream& out, std::ostream& err);

struct ScaleOptions {
  ScaleMode mode = ScaleMode::N;
  std::string range;
  std::optional<double> fixed;
  int horizon = 10;
  bool svg = false;
};
int cmd_scale(const CommonOptions& options, const ScaleOptions& scale, std::ostream& out, std::ostream& err);

int cmd_swingup(const CommonOptions& options, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------

template <typename Fn>
double median_seconds(int repetitions, Fn&& fn) {
  std::vector<double> samples;
  for (int i = 0; i < std::max(repetitions, 1); ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  return samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
}

}  // namespace sgopt::app
