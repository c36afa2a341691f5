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

#include "sgopt/cartpole.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <numbers>
#include <set>

namespace sgopt {

namespace {

std::vector<int> neighbors_of(int body, int bodies) {
  std::vector<int> out;
  if (body > 0) out.push_back(body - 1);
  if (body + 1 < bodies) out.push_back(body + 1);
  return out;
}

/// actuator index driving each cart, or -1.
std::vector<int> actuator_of_body(const ProblemConfig& config) {
  std::vector<int> out(static_cast<std::size_t>(config.bodies), -1);
  const auto acts = config.actuators();
  for (std::size_t a = 0; a < acts.size(); ++a) out[static_cast<std::size_t>(acts[a])] = static_cast<int>(a);
  return out;
}

void invalid(const std::string& what) { throw SolverError(ErrorKind::InvalidConfig, what); }

}  // namespace

void CartPoleParams::validate(bool allow_uncoupled) const {
  if (!(cart_mass > 0 && pendulum_mass > 0 && length > 0 && gravity > 0 && dt > 0))
    invalid("masses, length, gravity and dt must be positive");
  if (allow_uncoupled ? !(spring >= 0 && damping >= 0) : !(spring > 0 && damping > 0))
    invalid("spring and damping must be positive");
}

std::vector<int> actuator_layout(int bodies, const Actuation& actuation) {
  if (bodies < 1) invalid("at least one cart is required");
  int m = std::visit(
      [&](const auto& a) -> int {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ActuatorCount>)
          return a.m;
        else
          return static_cast<int>(std::lround(a.rho * bodies));
      },
      actuation);
  m = std::clamp(m, 1, bodies);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) out.push_back(static_cast<int>((static_cast<long>(a) * bodies) / m));
  return out;
}

std::vector<int> ProblemConfig::actuators() const {
  if (actuated) return *actuated;
  return actuator_layout(bodies, actuation);
}

void ProblemConfig::validate() const {
  if (bodies < 1) invalid("n must be >= 1");
  if (horizon < 1) invalid("horizon must be >= 1");
  const auto& w = weights;
  if (!(w.qx >= 0 && w.qtheta >= 0 && w.qu >= 0 && w.qxf >= 0 && w.qthetaf >= 0)) invalid("weights must be >= 0");
  if (x0.size() != state_dim()) invalid("x0 must have 4n entries");
  if (!x0.allFinite()) invalid("x0 must be finite");
  if (const auto* count = std::get_if<ActuatorCount>(&actuation); count && !actuated)
    if (count->m < 1 || count->m > bodies) invalid("actuator count must lie in [1, n]");
  if (const auto* ratio = std::get_if<ActuationRatio>(&actuation); ratio && !actuated)
    if (!(ratio->rho > 0 && ratio->rho <= 1)) invalid("rho must lie in (0, 1]");
  const auto acts = actuators();
  if (acts.empty()) invalid("at least one actuator is required");
  std::set<int> seen;
  for (int a : acts)
    if (a < 0 || a >= bodies || !seen.insert(a).second) invalid("actuated carts must be distinct cart indices");
}

Eigen::VectorXd upright_perturbed_state(int bodies, double degrees) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4 * bodies);
  for (int j = 0; j < bodies; ++j) x(pendulum_offset(bodies, j)) = degrees * std::numbers::pi / 180.0;
  return x;
}

Eigen::VectorXd hanging_state(int bodies) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4 * bodies);
  for (int j = 0; j < bodies; ++j) x(pendulum_offset(bodies, j)) = std::numbers::pi;
  return x;
}

ProblemConfig validation_config() {
  ProblemConfig config;
  config.bodies = 3;
  config.actuation = ActuatorCount{2};
  config.horizon = 150;
  config.x0 = upright_perturbed_state(3, 1.15);
  return config;
}

LocalDynamics local_linear_dynamics(const CartPoleParams& p) {
  const double dt = p.dt;
  const double h2 = dt * dt / 2.0;
  const double mc = p.cart_mass;
  const double mcl = mc * p.length;
  // Upright accelerations: xdd = (F - m_p g th) / m_c, thdd = ((m_c + m_p) g th - F) / (m_c L).
  const double xdd_th = -p.pendulum_mass * p.gravity / mc;
  const double thdd_th = (mc + p.pendulum_mass) * p.gravity / mcl;
  auto accel_block = [&](double from_pos, double from_vel) {
    Eigen::Matrix2d b;
    b << h2 * from_pos, h2 * from_vel, dt * from_pos, dt * from_vel;
    return b;
  };
  Eigen::Matrix2d kinematic;
  kinematic << 1.0, dt, 0.0, 1.0;

  LocalDynamics d;
  d.cart_from_cart = kinematic;
  d.cart_from_pendulum = accel_block(xdd_th, 0.0);
  d.cart_from_neighbor_cart = accel_block(p.spring / mc, p.damping / mc);
  d.pendulum_from_pendulum = kinematic + accel_block(thdd_th, 0.0);
  d.pendulum_from_cart = Eigen::Matrix2d::Zero();
  d.pendulum_from_neighbor_cart = accel_block(-p.spring / mcl, -p.damping / mcl);
  d.cart_from_control << h2 / mc, dt / mc;
  d.pendulum_from_control << -h2 / mcl, -dt / mcl;
  return d;
}

CouplingMagnitudes coupling_magnitudes(const CartPoleParams& p) {
  const double dt = p.dt;
  const double mcl = p.cart_mass * p.length;
  CouplingMagnitudes out;
  out.pendulum_from_neighbor_cart << p.spring * dt * dt / (2 * mcl), p.damping * dt * dt / (2 * mcl),
      p.spring * dt / mcl, p.damping * dt / mcl;
  out.cart_from_pendulum << p.pendulum_mass * p.gravity * dt * dt / (2 * p.cart_mass), 0.0,
      p.pendulum_mass * p.gravity * dt / p.cart_mass, 0.0;
  return out;
}

StepDynamics expand(const LocalDynamics& d, const ProblemConfig& config) {
  const int n = config.bodies;
  const auto act = actuator_of_body(config);
  StepDynamics step;
  step.cart.resize(static_cast<std::size_t>(n));
  step.pendulum.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto nbs = neighbors_of(j, n);
    const int deg = static_cast<int>(nbs.size());
    auto& c = step.cart[static_cast<std::size_t>(j)].terms;
    c.push_back({VariableKind::Cart, j, d.cart_from_own_cart(deg)});
    c.push_back({VariableKind::Pendulum, j, d.cart_from_pendulum});
    for (int i : nbs) c.push_back({VariableKind::Cart, i, d.cart_from_neighbor_cart});
    if (d.cart_from_neighbor_pendulum)
      for (int i : nbs) c.push_back({VariableKind::Pendulum, i, *d.cart_from_neighbor_pendulum});
    auto& p = step.pendulum[static_cast<std::size_t>(j)].terms;
    p.push_back({VariableKind::Pendulum, j, d.pendulum_from_pendulum});
    p.push_back({VariableKind::Cart, j, d.pendulum_from_own_cart(deg)});
    for (int i : nbs) p.push_back({VariableKind::Cart, i, d.pendulum_from_neighbor_cart});
    if (const int a = act[static_cast<std::size_t>(j)]; a >= 0) {
      c.push_back({VariableKind::Control, a, d.cart_from_control});
      p.push_back({VariableKind::Control, a, d.pendulum_from_control});
    }
  }
  return step;
}

namespace {

Index state_index(const BlockTerm& term, int bodies) {
  return term.kind == VariableKind::Cart ? cart_offset(term.body) : pendulum_offset(bodies, term.body);
}

}  // namespace

DenseTransition dense_transition(const StepDynamics& step, const ProblemConfig& config) {
  const int n = config.bodies;
  DenseTransition out;
  out.A = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  out.B = Eigen::MatrixXd::Zero(4 * n, config.actuator_count());
  out.offset = Eigen::VectorXd::Zero(4 * n);
  auto place = [&](const Transition& tr, Index row) {
    for (const auto& term : tr.terms) {
      if (term.kind == VariableKind::Control)
        out.B.block(row, term.body, 2, 1) += term.block;
      else
        out.A.block(row, state_index(term, n), 2, 2) += term.block;
    }
    out.offset.segment(row, 2) = tr.offset;
  };
  for (int j = 0; j < n; ++j) {
    place(step.cart[static_cast<std::size_t>(j)], cart_offset(j));
    place(step.pendulum[static_cast<std::size_t>(j)], pendulum_offset(n, j));
  }
  return out;
}

Eigen::VectorXd linear_step(const StepDynamics& step, const ProblemConfig& config, const Eigen::VectorXd& state,
                            const Eigen::VectorXd& control) {
  const int n = config.bodies;
  if (state.size() != 4 * n || control.size() != config.actuator_count())
    throw SolverError(ErrorKind::DimensionMismatch, "linear_step: state or control size");
  Eigen::VectorXd next(4 * n);
  auto apply = [&](const Transition& tr) {
    Eigen::Vector2d v = tr.offset;
    for (const auto& term : tr.terms) {
      if (term.kind == VariableKind::Control)
        v += term.block * control(term.body);
      else
        v += term.block * state.segment<2>(state_index(term, n));
    }
    return v;
  };
  for (int j = 0; j < n; ++j) {
    next.segment<2>(cart_offset(j)) = apply(step.cart[static_cast<std::size_t>(j)]);
    next.segment<2>(pendulum_offset(n, j)) = apply(step.pendulum[static_cast<std::size_t>(j)]);
  }
  return next;
}

namespace {

VariableKey key_of(const BlockTerm& term, int time) { return {term.kind, term.body, time}; }

FactorGraph build_graph(const ProblemConfig& config, std::span<const StepDynamics> steps, const Trajectory* nominal) {
  config.validate();
  const int n = config.bodies;
  const int T = config.horizon;
  const int m = config.actuator_count();
  if (static_cast<int>(steps.size()) != T - 1)
    throw SolverError(ErrorKind::DimensionMismatch, "need one step of dynamics per transition");
  for (const auto& s : steps)
    if (static_cast<int>(s.cart.size()) != n || static_cast<int>(s.pendulum.size()) != n)
      throw SolverError(ErrorKind::DimensionMismatch, "step dynamics body count");
  if (nominal && (nominal->states.rows() != T || nominal->states.cols() != 4 * n ||
                  nominal->controls.rows() != T - 1 || nominal->controls.cols() != m))
    throw SolverError(ErrorKind::DimensionMismatch, "nominal trajectory shape");

  FactorGraph graph;
  for (int t = T - 1; t >= 0; --t) {
    for (int j = 0; j < n; ++j) graph.add_variable(pendulum(j, t));
    for (int j = 0; j < n; ++j) graph.add_variable(cart(j, t));
    if (t >= 1)
      for (int a = 0; a < m; ++a) graph.add_variable(control(a, t - 1));
  }

  const auto& w = config.weights;
  auto nominal_state = [&](int t, Index offset) -> Eigen::Vector2d {
    return nominal ? Eigen::Vector2d(nominal->states.row(t).segment<2>(offset).transpose()) : Eigen::Vector2d::Zero();
  };
  auto add_cost = [&](const VariableKey& key, double q, const Eigen::VectorXd& nominal_value) {
    const double s = std::sqrt(q);
    const Index d = dim_of(key.kind);
    graph.add_factor(make_factor({key}, {s * Eigen::MatrixXd::Identity(d, d)}, -s * nominal_value));
  };
  auto add_dynamics = [&](const VariableKey& next, const Transition& tr, const Eigen::Vector2d& defect_offset) {
    std::vector<VariableKey> keys{next};
    std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Identity(2, 2)};
    for (const auto& term : tr.terms) {
      keys.push_back(key_of(term, next.time - 1));
      blocks.push_back(-term.block);
    }
    graph.add_factor(make_factor(std::move(keys), std::move(blocks), defect_offset, RowWeight::constraint()));
  };

  for (int t = T - 1; t >= 0; --t) {
    const bool terminal = t == T - 1;
    for (int j = 0; j < n; ++j)
      add_cost(pendulum(j, t), terminal ? w.qthetaf : w.qtheta, nominal_state(t, pendulum_offset(n, j)));
    for (int j = 0; j < n; ++j) add_cost(cart(j, t), terminal ? w.qxf : w.qx, nominal_state(t, cart_offset(j)));
    if (t >= 1)
      for (int a = 0; a < m; ++a) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(1);
        if (nominal) u(0) = nominal->controls(t - 1, a);
        add_cost(control(a, t - 1), w.qu, u);
      }
    if (t >= 1) {
      const auto& step = steps[static_cast<std::size_t>(t - 1)];
      for (int j = 0; j < n; ++j)
        add_dynamics(pendulum(j, t), step.pendulum[static_cast<std::size_t>(j)],
                     step.pendulum[static_cast<std::size_t>(j)].offset);
      for (int j = 0; j < n; ++j)
        add_dynamics(cart(j, t), step.cart[static_cast<std::size_t>(j)], step.cart[static_cast<std::size_t>(j)].offset);
    }
  }
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector2d v = config.x0.segment<2>(pendulum_offset(n, j)) - nominal_state(0, pendulum_offset(n, j));
    graph.add_factor(make_factor({pendulum(j, 0)}, {Eigen::MatrixXd::Identity(2, 2)}, v, RowWeight::constraint()));
  }
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector2d v = config.x0.segment<2>(cart_offset(j)) - nominal_state(0, cart_offset(j));
    graph.add_factor(make_factor({cart(j, 0)}, {Eigen::MatrixXd::Identity(2, 2)}, v, RowWeight::constraint()));
  }
  return graph;
}

}  // namespace

FactorGraph build_ocp_graph(const ProblemConfig& config, const LocalDynamics& dynamics) {
  config.validate();
  const std::vector<StepDynamics> steps(static_cast<std::size_t>(config.horizon - 1), expand(dynamics, config));
  return build_graph(config, steps, nullptr);
}

FactorGraph build_ocp_graph(const ProblemConfig& config, std::span<const StepDynamics> steps) {
  return build_graph(config, steps, nullptr);
}

FactorGraph build_deviation_graph(const ProblemConfig& config, std::span<const StepDynamics> steps,
                                  const Trajectory& nominal) {
  return build_graph(config, steps, &nominal);
}

std::vector<VariableKey> figure_column_order(const ProblemConfig& config) {
  std::vector<VariableKey> out;
  const int m = config.actuator_count();
  for (int t = config.horizon - 1; t >= 0; --t) {
    for (int j = 0; j < config.bodies; ++j) out.push_back(pendulum(j, t));
    for (int j = 0; j < config.bodies; ++j) out.push_back(cart(j, t));
    if (t >= 1)
      for (int a = 0; a < m; ++a) out.push_back(control(a, t - 1));
  }
  return out;
}

Ordering structured_ordering(const ProblemConfig& config) {
  return structured_ordering(config.bodies, config.actuator_count(), config.horizon);
}

Trajectory to_trajectory(const ProblemConfig& config, const Solution& solution) {
  const int n = config.bodies;
  const int T = config.horizon;
  const int m = config.actuator_count();
  Trajectory out;
  out.states.resize(T, 4 * n);
  out.controls.resize(T - 1, m);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      out.states.row(t).segment<2>(cart_offset(j)) = solution.at(cart(j, t)).transpose();
      out.states.row(t).segment<2>(pendulum_offset(n, j)) = solution.at(pendulum(j, t)).transpose();
    }
    if (t + 1 < T)
      for (int a = 0; a < m; ++a) out.controls(t, a) = solution.at(control(a, t))(0);
  }
  return out;
}

double trajectory_cost(const ProblemConfig& config, const Trajectory& trajectory) {
  const int n = config.bodies;
  const int T = trajectory.horizon();
  const auto& w = config.weights;
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const bool terminal = t == T - 1;
    const auto row = trajectory.states.row(t);
    cost += (terminal ? w.qxf : w.qx) * row.head(2 * n).squaredNorm();
    cost += (terminal ? w.qthetaf : w.qtheta) * row.tail(2 * n).squaredNorm();
    if (!terminal) cost += w.qu * trajectory.controls.row(t).squaredNorm();
  }
  return cost;
}

double body_energy(const Eigen::Vector4d& z, const CartPoleParams& p) {
  const double xd = z(1), th = z(2), thd = z(3);
  return 0.5 * (p.cart_mass + p.pendulum_mass) * xd * xd + p.pendulum_mass * p.length * xd * thd * std::cos(th) +
         0.5 * p.pendulum_mass * p.length * p.length * thd * thd + p.pendulum_mass * p.gravity * p.length * std::cos(th);
}

namespace {

using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 5, 1>>;

/// d body_step / d (x, xd, th, thd, F).
Eigen::Matrix<double, 4, 5> body_jacobian(const Eigen::Vector4d& z, double force, const CartPoleParams& p) {
  Eigen::Matrix<Dual, 4, 1> zd;
  for (int i = 0; i < 4; ++i) zd(i) = Dual(z(i), 5, i);
  const Dual fd(force, 5, 4);
  const Eigen::Matrix<Dual, 4, 1> out = body_step<Dual>(zd, fd, p);
  Eigen::Matrix<double, 4, 5> jac;
  for (int i = 0; i < 4; ++i) jac.row(i) = out(i).derivatives().transpose();
  return jac;
}

}  // namespace

std::vector<StepDynamics> linearize_about(const Trajectory& trajectory, const ProblemConfig& config,
                                          const CartPoleParams& p) {
  const int n = config.bodies;
  const int T = trajectory.horizon();
  const auto acts = config.actuators();
  const auto act = actuator_of_body(config);
  if (trajectory.states.cols() != 4 * n || trajectory.controls.rows() != T - 1 ||
      trajectory.controls.cols() != static_cast<Index>(acts.size()))
    throw SolverError(ErrorKind::DimensionMismatch, "linearize_about: trajectory shape");

  std::vector<StepDynamics> steps(static_cast<std::size_t>(std::max(T - 1, 0)));
  Eigen::RowVector2d spring_row;
  spring_row << p.spring, p.damping;
  for (int t = 0; t + 1 < T; ++t) {
    const Eigen::VectorXd x = trajectory.states.row(t).transpose();
    const Eigen::VectorXd u = trajectory.controls.row(t).transpose();
    const Eigen::VectorXd defect = nonlinear_step<double>(x, u, acts, p) - trajectory.states.row(t + 1).transpose();
    auto& step = steps[static_cast<std::size_t>(t)];
    step.cart.resize(static_cast<std::size_t>(n));
    step.pendulum.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const auto nbs = neighbors_of(j, n);
      const int a = act[static_cast<std::size_t>(j)];
      double force = a >= 0 ? u(a) : 0.0;
      for (int i : nbs)
        force += p.spring * (x(cart_offset(i)) - x(cart_offset(j))) +
                 p.damping * (x(cart_offset(i) + 1) - x(cart_offset(j) + 1));
      Eigen::Vector4d z;
      z << x.segment<2>(cart_offset(j)), x.segment<2>(pendulum_offset(n, j));
      const Eigen::Matrix<double, 4, 5> jac = body_jacobian(z, force, p);

      for (int half = 0; half < 2; ++half) {
        const Eigen::Matrix<double, 2, 5> rows = jac.middleRows<2>(2 * half);
        const Eigen::Vector2d dforce = rows.col(4);
        Transition tr;
        const Eigen::Matrix2d own_cart = rows.leftCols<2>() - static_cast<double>(nbs.size()) * dforce * spring_row;
        if (half == 0) {
          tr.terms.push_back({VariableKind::Cart, j, own_cart});
          tr.terms.push_back({VariableKind::Pendulum, j, rows.middleCols<2>(2)});
        } else {
          tr.terms.push_back({VariableKind::Pendulum, j, rows.middleCols<2>(2)});
          tr.terms.push_back({VariableKind::Cart, j, own_cart});
        }
        for (int i : nbs) tr.terms.push_back({VariableKind::Cart, i, dforce * spring_row});
        if (a >= 0) tr.terms.push_back({VariableKind::Control, a, dforce});
        if (half == 0) {
          tr.offset = defect.segment<2>(cart_offset(j));
          step.cart[static_cast<std::size_t>(j)] = std::move(tr);
        } else {
          tr.offset = defect.segment<2>(pendulum_offset(n, j));
          step.pendulum[static_cast<std::size_t>(j)] = std::move(tr);
        }
      }
    }
  }
  return steps;
}

Trajectory simulate(const ProblemConfig& config, const CartPoleParams& params, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& controls, const SimulationModel& model) {
  const int n = config.bodies;
  const auto acts = config.actuators();
  if (x0.size() != 4 * n || controls.cols() != static_cast<Index>(acts.size()) ||
      controls.rows() != config.horizon - 1)
    throw SolverError(ErrorKind::DimensionMismatch, "simulate: x0 or control shape");
  const Index T = controls.rows() + 1;
  Trajectory out;
  out.states.resize(T, 4 * n);
  out.controls = controls;
  out.states.row(0) = x0.transpose();
  std::optional<StepDynamics> linear;
  if (const auto* lm = std::get_if<LinearModel>(&model)) linear = expand(lm->dynamics, config);
  for (Index t = 0; t + 1 < T; ++t) {
    const Eigen::VectorXd x = out.states.row(t).transpose();
    const Eigen::VectorXd u = controls.row(t).transpose();
    out.states.row(t + 1) =
        (linear ? linear_step(*linear, config, x, u) : nonlinear_step<double>(x, u, acts, params)).transpose();
  }
  return out;
}

}  // namespace sgopt
