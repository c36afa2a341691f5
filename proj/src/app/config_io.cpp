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
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sgopt/experiments.hpp"

namespace sgopt::app {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw SolverError(ErrorKind::InvalidConfig, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!keys.contains(key)) bad("unknown key '" + key + "' in " + where);
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) bad(name + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(name + " must be finite");
  return x;
}

int integer(const json& v, const std::string& name) {
  if (!v.is_number_integer()) bad(name + " must be an integer");
  const auto x = v.get<long long>();
  if (x < 0 || x > 1'000'000) bad(name + " is out of range");
  return static_cast<int>(x);
}

void set_if(const json& obj, const char* key, double& target, const std::string& prefix = "") {
  if (obj.contains(key)) target = number(obj.at(key), prefix + key);
}

StatePreset parse_preset(const json& v) {
  StatePreset preset;
  if (v.is_string()) {
    if (v.get<std::string>() != "hanging") bad("preset string must be \"hanging\"");
    preset.hanging = true;
    return preset;
  }
  if (v.is_object()) {
    check_keys(v, "preset", {"upright_perturbed", "hanging"});
    if (v.size() != 1) bad("preset must name exactly one state");
    if (v.contains("hanging")) {
      preset.hanging = true;
    } else {
      preset.upright_degrees = number(v.at("upright_perturbed"), "preset.upright_perturbed");
    }
    return preset;
  }
  bad("preset must be \"hanging\" or {\"upright_perturbed\": degrees}");
}

}  // namespace

Eigen::VectorXd StatePreset::state(int bodies) const {
  return hanging ? hanging_state(bodies) : upright_perturbed_state(bodies, upright_degrees);
}

RunConfig default_validate_config() {
  RunConfig run;
  run.problem = validation_config();
  run.preset = StatePreset{false, 1.15};
  return run;
}

RunConfig default_swingup_config() {
  RunConfig run;
  run.problem.bodies = 5;
  run.problem.actuation = ActuatorCount{2};
  run.problem.horizon = 50;
  run.preset = StatePreset{true, 0.0};
  run.problem.x0 = run.preset->state(5);
  return run;
}

RunConfig parse_config(const std::string& json_text, const RunConfig& defaults) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"n", "actuation", "horizon", "dt", "masses", "length", "spring", "damping", "gravity", "weights", "x0",
              "preset", "actuators"});

  RunConfig run = defaults;
  auto& pb = run.problem;
  auto& pa = run.params;
  if (doc.contains("n")) pb.bodies = integer(doc.at("n"), "n");
  if (doc.contains("horizon")) pb.horizon = integer(doc.at("horizon"), "horizon");
  if (doc.contains("actuation")) {
    const auto& a = doc.at("actuation");
    check_keys(a, "actuation", {"m", "rho"});
    if (a.size() != 1) bad("actuation must hold exactly one of m or rho");
    if (a.contains("m"))
      pb.actuation = ActuatorCount{integer(a.at("m"), "actuation.m")};
    else
      pb.actuation = ActuationRatio{number(a.at("rho"), "actuation.rho")};
  }
  if (doc.contains("actuators")) {
    const auto& list = doc.at("actuators");
    if (!list.is_array()) bad("actuators must be an array of cart indices");
    std::vector<int> acts;
    for (const auto& v : list) acts.push_back(integer(v, "actuators[]"));
    pb.actuated = acts;
  }
  set_if(doc, "dt", pa.dt);
  set_if(doc, "length", pa.length);
  set_if(doc, "spring", pa.spring);
  set_if(doc, "damping", pa.damping);
  set_if(doc, "gravity", pa.gravity);
  if (doc.contains("masses")) {
    const auto& m = doc.at("masses");
    check_keys(m, "masses", {"cart", "pendulum"});
    set_if(m, "cart", pa.cart_mass, "masses.");
    set_if(m, "pendulum", pa.pendulum_mass, "masses.");
  }
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    check_keys(w, "weights", {"qx", "qtheta", "qu", "qxf", "qthetaf"});
    set_if(w, "qx", pb.weights.qx, "weights.");
    set_if(w, "qtheta", pb.weights.qtheta, "weights.");
    set_if(w, "qu", pb.weights.qu, "weights.");
    set_if(w, "qxf", pb.weights.qxf, "weights.");
    set_if(w, "qthetaf", pb.weights.qthetaf, "weights.");
  }

  if (doc.contains("x0") && doc.contains("preset")) bad("give either x0 or preset, not both");
  if (doc.contains("x0")) {
    const auto& list = doc.at("x0");
    if (!list.is_array()) bad("x0 must be an array");
    pb.x0.resize(static_cast<Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) pb.x0(static_cast<Index>(i)) = number(list[i], "x0[]");
    run.preset.reset();
  } else if (doc.contains("preset")) {
    run.preset = parse_preset(doc.at("preset"));
  }
  if (run.preset) pb.x0 = run.preset->state(pb.bodies);

  pb.validate();
  pa.validate();
  return run;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& defaults) {
  std::ifstream in(path);
  if (!in) bad("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), defaults);
}

std::vector<double> parse_range(const std::string& text) {
  auto to_number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      bad("bad number '" + s + "' in range '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) bad("bad number '" + s + "' in range '" + text + "'");
    return v;
  };
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
  };

  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) bad("range must be a:b:step");
    const double a = to_number(parts[0]);
    const double b = to_number(parts[1]);
    const double step = to_number(parts[2]);
    if (!(step > 0) || b < a) bad("range needs step > 0 and b >= a");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 100000) bad("range has too many points");
    for (long i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    for (const auto& part : split(text, ',')) out.push_back(to_number(part));
  }
  if (out.empty()) bad("range is empty");
  return out;
}

std::string to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::Structured: return "structured";
    case OrderingKind::MinDegree: return "mindegree";
    case OrderingKind::MinFill: return "minfill";
  }
  return "unknown";
}

OrderingKind parse_ordering(const std::string& text) {
  if (text == "structured") return OrderingKind::Structured;
  if (text == "mindegree") return OrderingKind::MinDegree;
  if (text == "minfill") return OrderingKind::MinFill;
  bad("ordering must be structured, mindegree or minfill");
}

Ordering make_ordering(OrderingKind kind, const ProblemConfig& config, const FactorGraph& graph) {
  switch (kind) {
    case OrderingKind::Structured: return structured_ordering(config);
    case OrderingKind::MinDegree: return min_degree_ordering(graph);
    case OrderingKind::MinFill: return min_fill_ordering(graph);
  }
  bad("unknown ordering");
}

}  // namespace sgopt::app
