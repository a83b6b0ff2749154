#pragma once

// Closed-form cache sizing under a step-function reuse-distance histogram.
//
// The histogram is flat on [0, D) and zero beyond, so a cache of x blocks
// misses with rate M(x) = (D - x) / D for x <= D and 0 above. With
// quadratic costs a_i * x_i^2:
//
//   one level:  min a x^2   s.t. CPI + m (D - x)/D <= T
//               x = D (1 - (T - CPI)/m)
//
//   two levels (each level sees M(x_i) independently, the inclusive form):
//               min a1 x1^2 + a2 x2^2
//               s.t. CPI + m1 (D - x1)/D + m2 (D - x2)/D <= T
//               x1 = a2 m1 P,  x2 = a1 m2 P,
//               P = D (CPI + m1 + m2 - T) / (a1 m2^2 + a2 m1^2)
//
// Outside the interior region the solution is clamped to [0, D].

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdcache {

struct StepModel {
  double max_distance = 0.0;  // D
  double cpi_base = 1.0;
  double target_delay = 0.0;  // T
  std::vector<double> unit_cost;     // a or (a1, a2)
  std::vector<double> miss_penalty;  // m or (m1, m2)
  double step_height = 1.0;  // cancels out of every miss rate

  std::size_t levels() const { return unit_cost.size(); }

  double miss_rate(double x) const {
    if (x >= max_distance) return 0.0;
    if (x <= 0) return 1.0;
    return (max_distance - x) / max_distance;
  }

  double delay(const std::vector<double>& sizes) const {
    double t = cpi_base;
    for (std::size_t i = 0; i < sizes.size(); ++i) t += miss_penalty[i] * miss_rate(sizes[i]);
    return t;
  }

  double cost(const std::vector<double>& sizes) const {
    double c = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) c += unit_cost[i] * sizes[i] * sizes[i];
    return c;
  }

  void validate(std::size_t expected_levels) const {
    if (!(max_distance > 0)) throw std::invalid_argument("step model needs D > 0");
    if (unit_cost.size() != expected_levels || miss_penalty.size() != expected_levels)
      throw std::invalid_argument("step model needs " + std::to_string(expected_levels) +
                                  " unit cost(s) and miss penalty(ies)");
    for (double a : unit_cost)
      if (!(a > 0)) throw std::invalid_argument("unit costs must be positive");
    for (double m : miss_penalty)
      if (!(m > 0)) throw std::invalid_argument("miss penalties must be positive");
  }
};

struct OneLevelSolution {
  bool feasible = false;
  double size = 0.0;
  bool clamped = false;  // closed form fell outside [0, D]
};

inline OneLevelSolution solve_one_level(double D, double slack, double m) {
  // slack = T - CPI
  OneLevelSolution s;
  if (slack < 0) return s;
  s.feasible = true;
  const double raw = D * (1.0 - slack / m);
  s.size = std::clamp(raw, 0.0, D);
  s.clamped = s.size != raw;
  return s;
}

inline OneLevelSolution optimal_one_level(const StepModel& model) {
  model.validate(1);
  return solve_one_level(model.max_distance, model.target_delay - model.cpi_base, model.miss_penalty[0]);
}

struct TwoLevelSolution {
  bool feasible = false;
  bool interior = false;  // unclamped stationary point is valid
  double x1 = 0.0;
  double x2 = 0.0;
  double p = 0.0;  // P, NaN when not computed
  // (m1 x1 + m2 x2)/D - (CPI + m1 + m2 - T); zero when the constraint binds.
  double constraint_residual = 0.0;
};

inline TwoLevelSolution optimal_two_level(const StepModel& model) {
  model.validate(2);
  const double D = model.max_distance;
  const double a1 = model.unit_cost[0], a2 = model.unit_cost[1];
  const double m1 = model.miss_penalty[0], m2 = model.miss_penalty[1];
  const double slack = model.target_delay - model.cpi_base;
  const double excess = model.cpi_base + m1 + m2 - model.target_delay;

  TwoLevelSolution s;
  s.p = NAN;
  if (slack < 0) return s;
  s.feasible = true;
  if (excess <= 0) {
    // Bound met with no cache at all.
    s.interior = false;
    s.constraint_residual = 0.0;
    return s;
  }
  s.p = D * excess / (a1 * m2 * m2 + a2 * m1 * m1);
  s.x1 = a2 * m1 * s.p;
  s.x2 = a1 * m2 * s.p;
  if (s.x1 <= D && s.x2 <= D) {
    s.interior = true;
  } else if (s.x2 > D) {
    s.x2 = D;
    s.x1 = solve_one_level(D, slack, m1).size;
  } else {
    s.x1 = D;
    s.x2 = solve_one_level(D, slack, m2).size;
  }
  s.constraint_residual = (m1 * s.x1 + m2 * s.x2) / D - excess;
  return s;
}

enum class StepParameter { max_distance, cpi_base, target_delay, a1, a2, m1, m2 };

inline const char* to_string(StepParameter p) {
  switch (p) {
    case StepParameter::max_distance: return "D";
    case StepParameter::cpi_base: return "cpi_base";
    case StepParameter::target_delay: return "T";
    case StepParameter::a1: return "a1";
    case StepParameter::a2: return "a2";
    case StepParameter::m1: return "m1";
    case StepParameter::m2: return "m2";
  }
  return "?";
}

inline double& parameter_ref(StepModel& m, StepParameter p) {
  switch (p) {
    case StepParameter::max_distance: return m.max_distance;
    case StepParameter::cpi_base: return m.cpi_base;
    case StepParameter::target_delay: return m.target_delay;
    case StepParameter::a1: return m.unit_cost.at(0);
    case StepParameter::a2: return m.unit_cost.at(1);
    case StepParameter::m1: return m.miss_penalty.at(0);
    case StepParameter::m2: return m.miss_penalty.at(1);
  }
  throw std::invalid_argument("unknown parameter");
}

struct Sensitivity {
  StepParameter parameter;
  double relative_delta;
  double dx1;
  double dx2;
};

/// Change in the two-level optimum when one parameter is scaled by
/// (1 + relative_delta). Both points must be interior solutions.
inline Sensitivity sensitivity(const StepModel& model, StepParameter parameter, double relative_delta) {
  const auto base = optimal_two_level(model);
  StepModel moved = model;
  parameter_ref(moved, parameter) *= 1.0 + relative_delta;
  if (!base.interior) throw std::domain_error("sensitivity: base point is not an interior solution");
  const auto after = optimal_two_level(moved);
  if (!after.interior) throw std::domain_error("sensitivity: perturbation leaves the interior region");
  return {parameter, relative_delta, after.x1 - base.x1, after.x2 - base.x2};
}

inline nlohmann::json analytic_report(const StepModel& model, double relative_delta) {
  nlohmann::json j;
  j["inputs"] = {{"D", model.max_distance},           {"cpi_base", model.cpi_base},
                 {"T", model.target_delay},           {"unit_cost", model.unit_cost},
                 {"miss_penalty", model.miss_penalty}, {"step_height", model.step_height}};
  auto notes = nlohmann::json::array();
  if (model.levels() == 1) {
    const auto s = optimal_one_level(model);
    j["solution"] = {{"levels", 1}, {"feasible", s.feasible}, {"x1", s.feasible ? nlohmann::json(s.size) : nlohmann::json(nullptr)},
                     {"clamped", s.clamped}};
    if (s.feasible) {
      j["solution"]["delay"] = model.delay({s.size});
      j["solution"]["cost"] = model.cost({s.size});
      j["solution"]["constraint_residual"] = model.delay({s.size}) - model.target_delay;
      if (s.size == 0.0)
        notes.push_back("the delay bound is met without a cache: the miss penalty is too small for a cache to pay off");
    } else {
      notes.push_back("infeasible: target delay is below CPI_base");
    }
  } else if (model.levels() == 2) {
    const auto s = optimal_two_level(model);
    j["solution"] = {{"levels", 2},
                     {"feasible", s.feasible},
                     {"interior", s.interior},
                     {"x1", s.feasible ? nlohmann::json(s.x1) : nlohmann::json(nullptr)},
                     {"x2", s.feasible ? nlohmann::json(s.x2) : nlohmann::json(nullptr)},
                     {"P", std::isnan(s.p) ? nlohmann::json(nullptr) : nlohmann::json(s.p)},
                     {"constraint_residual", s.constraint_residual}};
    if (s.feasible) {
      j["solution"]["delay"] = model.delay({s.x1, s.x2});
      j["solution"]["cost"] = model.cost({s.x1, s.x2});
    } else {
      notes.push_back("infeasible: target delay is below CPI_base");
    }
    if (s.feasible && s.x1 == 0.0 && s.x2 == 0.0)
      notes.push_back("the delay bound is met without caches");
    auto table = nlohmann::json::array();
    for (auto p : {StepParameter::a1, StepParameter::a2, StepParameter::m1, StepParameter::m2, StepParameter::cpi_base,
                   StepParameter::target_delay, StepParameter::max_distance}) {
      nlohmann::json row = {{"parameter", to_string(p)}, {"relative_delta", relative_delta}};
      try {
        const auto sens = sensitivity(model, p, relative_delta);
        row["valid"] = true;
        row["dx1"] = sens.dx1;
        row["dx2"] = sens.dx2;
      } catch (const std::domain_error&) {
        row["valid"] = false;
      }
      table.push_back(row);
    }
    j["sensitivity"] = table;
  } else {
    throw std::invalid_argument("closed forms exist for one or two levels only");
  }
  notes.push_back("per-level hit latencies are not modeled; a slow L1 can make a cache level a net loss");
  j["notes"] = notes;
  return j;
}

}  // namespace rdcache
