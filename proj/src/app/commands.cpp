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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include "sgopt/experiments.hpp"

namespace sgopt::app {

namespace {

constexpr double kUprightTolerance = 0.05;
constexpr double kReferenceValidationCost = 2011.26;
constexpr double kPerturbationDegrees = 1.15;

std::string error_status(const SolverError& e) { return std::string("error:") + std::string(to_string(e.kind())); }

ExperimentRecord base_record(const std::string& experiment, const ProblemConfig& config) {
  ExperimentRecord r;
  r.experiment = experiment;
  r.n = config.bodies;
  r.t = config.horizon;
  try {
    r.m = config.actuator_count();
  } catch (const SolverError&) {
    r.m = 0;
  }
  return r;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SGOPT_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
  }
  return std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(jobs, 1))));
}

RunConfig load_or(const CommonOptions& options, const RunConfig& defaults) {
  return options.config ? load_config(*options.config, defaults) : defaults;
}

}  // namespace

ExperimentRecord run_sgopt(const std::string& experiment, const RunConfig& run, OrderingKind ordering_kind,
                           const SolveTiming& timing, SolveResult* result_out) {
  ExperimentRecord r = base_record(experiment, run.problem);
  r.ordering = to_string(ordering_kind);
  r.solver = "sgopt";
  try {
    const auto build_start = std::chrono::steady_clock::now();
    const FactorGraph graph = build_ocp_graph(run.problem, local_linear_dynamics(run.params));
    const Ordering ordering = make_ordering(ordering_kind, run.problem, graph);
    r.build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - build_start).count();

    SolveResult result;
    r.runtime_s = median_seconds(timing.repetitions, [&] { result = solve(graph, ordering); });
    r.cost = result.solution.total_cost;
    r.max_p1 = result.stats.max_p1();
    r.max_p2 = result.stats.max_p2();
    r.max_violation = result.max_constraint_violation;
    if (result_out) *result_out = std::move(result);
  } catch (const SolverError& e) {
    r.status = error_status(e);
  }
  return r;
}

ExperimentRecord run_riccati(const std::string& experiment, const RunConfig& run, const SolveTiming& timing,
                             RiccatiResult* result_out) {
  ExperimentRecord r = base_record(experiment, run.problem);
  r.ordering = "none";
  r.solver = "riccati";
  try {
    const auto build_start = std::chrono::steady_clock::now();
    const DenseLTIModel model = assemble_dense_lti(run.problem, local_linear_dynamics(run.params));
    r.build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - build_start).count();
    RiccatiResult result;
    r.runtime_s =
        median_seconds(timing.repetitions, [&] { result = riccati_lqr(model, run.problem.horizon, run.problem.x0); });
    r.cost = result.cost;
    if (result_out) *result_out = std::move(result);
  } catch (const SolverError& e) {
    r.status = error_status(e);
  }
  return r;
}

std::vector<ExperimentRecord> run_scale(const ScaleRequest& request) {
  const std::string experiment = request.mode == ScaleMode::N ? "scale_n" : "scale_rho";
  const std::size_t per_point = request.orderings.size() + (request.include_riccati ? 1 : 0);
  std::vector<std::vector<ExperimentRecord>> rows(request.points.size());

  auto run_point = [&](std::size_t i) {
    RunConfig run;
    run.params = request.params;
    run.problem.weights = request.weights;
    run.problem.horizon = request.horizon;
    const double point = request.points[i];
    if (request.mode == ScaleMode::N) {
      run.problem.bodies = static_cast<int>(std::lround(point));
      run.problem.actuation = ActuationRatio{request.fixed.value_or(0.25)};
    } else {
      run.problem.bodies = static_cast<int>(std::lround(request.fixed.value_or(30.0)));
      run.problem.actuation = ActuationRatio{point};
    }
    auto& out = rows[i];
    try {
      if (run.problem.bodies < 1) throw SolverError(ErrorKind::InvalidConfig, "n must be >= 1");
      run.problem.x0 = upright_perturbed_state(run.problem.bodies, kPerturbationDegrees);
      run.problem.validate();
      run.params.validate();
    } catch (const SolverError& e) {
      ExperimentRecord r = base_record(experiment, run.problem);
      r.solver = "all";
      r.ordering = "none";
      r.status = error_status(e);
      out.assign(per_point, r);
      return;
    }
    for (OrderingKind kind : request.orderings) out.push_back(run_sgopt(experiment, run, kind, request.timing));
    if (request.include_riccati) out.push_back(run_riccati(experiment, run, request.timing));
  };

  const unsigned workers = worker_count(request.threads, request.points.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < request.points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < request.points.size(); i = next++) run_point(i);
      });
  }

  std::vector<ExperimentRecord> out;
  for (auto& block : rows) out.insert(out.end(), block.begin(), block.end());
  return out;
}

int cmd_validate(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  RunConfig run;
  try {
    run = load_or(options, default_validate_config());
  } catch (const SolverError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  const OrderingKind ordering = options.ordering.value_or(OrderingKind::Structured);

  SolveResult solved;
  const ExperimentRecord sg = run_sgopt("validate", run, ordering, {}, &solved);
  const ExperimentRecord rc = run_riccati("validate", run);
  try {
    write_records(options.out_dir / "validate.csv", {sg, rc});
    if (sg.status == "ok")
      write_trajectory_csv(options.out_dir / "trajectory.csv", run.problem, to_trajectory(run.problem, solved.solution));
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (sg.status != "ok" || rc.status != "ok") {
    err << "solver failure: sgopt " << sg.status << ", riccati " << rc.status << '\n';
    return kExitFailure;
  }

  const double diff = std::abs(sg.cost - rc.cost);
  const double scale = std::abs(rc.cost);
  const bool match = diff <= 1e-6 * scale || (scale == 0.0 && diff <= 1e-12);
  out << "sgopt cost    " << sg.cost << " (" << sg.runtime_s << " s, max p1 " << sg.max_p1 << ", max p2 " << sg.max_p2
      << ")\n";
  out << "riccati cost  " << rc.cost << " (" << rc.runtime_s << " s)\n";
  out << "relative diff " << (scale > 0 ? diff / scale : diff) << (match ? "  [match]" : "  [MISMATCH]") << '\n';
  out << "max dynamics violation " << sg.max_violation << '\n';
  out << "reference cost " << kReferenceValidationCost << ", deviation "
      << std::abs(sg.cost - kReferenceValidationCost) / kReferenceValidationCost * 100.0 << "%\n";
  return match ? kExitOk : kExitFailure;
}

int cmd_scale(const CommonOptions& options, const ScaleOptions& scale, std::ostream& out, std::ostream& err) {
  ScaleRequest request;
  request.mode = scale.mode;
  request.fixed = scale.fixed;
  request.horizon = scale.horizon;
  if (options.ordering) request.orderings = {*options.ordering};
  try {
    request.points = parse_range(scale.range);
    if (options.config) {
      const RunConfig run = load_config(*options.config, default_validate_config());
      request.params = run.params;
      request.weights = run.problem.weights;
    }
    if (scale.horizon < 1) throw SolverError(ErrorKind::InvalidConfig, "horizon must be >= 1");
  } catch (const SolverError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto records = run_scale(request);
  const std::string name = scale.mode == ScaleMode::N ? "scale_n" : "scale_rho";
  try {
    write_records(options.out_dir / (name + ".csv"), records);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::size_t ok = 0;
  for (const auto& r : records) {
    if (r.status == "ok") ++ok;
    out << r.experiment << " n=" << r.n << " m=" << r.m << " t=" << r.t << ' ' << r.solver << '/' << r.ordering
        << " cost=" << r.cost << " runtime=" << r.runtime_s << "s max_p2=" << r.max_p2 << ' ' << r.status << '\n';
  }

  if (scale.svg) {
    const bool by_n = scale.mode == ScaleMode::N;
    std::vector<ChartSeries> cost_series, time_series;
    std::vector<std::pair<std::string, std::string>> keys;
    for (OrderingKind k : request.orderings) keys.emplace_back("sgopt", to_string(k));
    keys.emplace_back("riccati", "none");
    for (const auto& [solver, ordering] : keys) {
      ChartSeries c{solver == "riccati" ? solver : solver + " (" + ordering + ")", {}, {}};
      ChartSeries t = c;
      for (const auto& r : records) {
        if (r.solver != solver || r.ordering != ordering || r.status != "ok") continue;
        const double x = by_n ? r.n : static_cast<double>(r.m) / r.n;
        c.x.push_back(x);
        c.y.push_back(r.cost);
        t.x.push_back(x);
        t.y.push_back(r.runtime_s);
      }
      cost_series.push_back(std::move(c));
      time_series.push_back(std::move(t));
    }
    const std::string x_label = by_n ? "number of carts N" : "actuation ratio M/N";
    try {
      std::ofstream(options.out_dir / (name + "_cost.svg"))
          << render_line_chart({"Cost vs " + x_label, x_label, "cost", by_n, false}, cost_series);
      std::ofstream(options.out_dir / (name + "_runtime.svg"))
          << render_line_chart({"Solve time vs " + x_label, x_label, "runtime [s]", by_n, true}, time_series);
    } catch (const std::exception& e) {
      err << "output error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  if (ok == 0) {
    err << "no sweep point succeeded\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_swingup(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  RunConfig run;
  try {
    run = load_or(options, default_swingup_config());
    if (run.problem.horizon < 2)
      throw SolverError(ErrorKind::InvalidConfig, "horizon must be at least 2: a single step has no controls");
    if (options.ordering && *options.ordering != OrderingKind::Structured)
      throw SolverError(ErrorKind::InvalidConfig, "swingup needs the structured ordering for its closed-loop rollout");
  } catch (const SolverError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  LmResult result;
  try {
    result = iterative_sgopt(run.problem, run.params, zero_control_rollout(run.problem, run.params));
  } catch (const SolverError& e) {
    err << "swing-up failed: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig ? kExitUsage : kExitFailure;
  }

  try {
    std::filesystem::create_directories(options.out_dir);
    std::ofstream log(options.out_dir / "swingup.csv", std::ios::binary);
    log << "iteration,lambda,cost,accepted\n";
    char buf[128];
    for (const auto& it : result.log) {
      std::snprintf(buf, sizeof buf, "%d,%.6g,%.12g,%d\n", it.iteration, it.lambda, it.cost, it.accepted ? 1 : 0);
      log << buf;
    }
    write_trajectory_csv(options.out_dir / "swingup_traj.csv", run.problem, result.trajectory);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitUsage;
  }

  const int n = run.problem.bodies;
  const auto final_state = result.trajectory.states.row(run.problem.horizon - 1);
  double worst = 0.0;
  for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(final_state(pendulum_offset(n, j))));
  const char* status = result.status == LmStatus::Converged   ? "converged"
                       : result.status == LmStatus::LambdaCap ? "lambda cap"
                                                              : "iteration limit";
  out << "iterations " << result.iterations << " (accepted " << result.accepted_steps << "), " << status << '\n';
  out << "cost " << result.cost_history.front() << " -> " << result.cost_history.back() << '\n';
  out << "max final |theta| " << worst << " rad (tolerance " << kUprightTolerance << ")\n";
  return worst <= kUprightTolerance ? kExitOk : kExitFailure;
}

}  // namespace sgopt::app
