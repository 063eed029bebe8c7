#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "impedance/errors.hpp"
#include "impedance/estimator.hpp"
#include "impedance/impedance_core.hpp"
#include "impedance/tuning_eval.hpp"

namespace impedance {

using json = nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// ---- parameters -----------------------------------------------------------

inline json to_json(const ImpedanceProfile& p) {
  return {{"coeffs", p.coeffs()}, {"swing", p.swing_value()}, {"stance_end", p.stance_end()}};
}

inline json to_json(const EquilibriumSchedule& s) {
  return {{"boundaries", s.boundaries()}, {"angles", s.angles()}, {"label", s.label()}};
}

inline json to_json(const ImpedanceParameters& p) {
  return {{"stiffness", to_json(p.stiffness)}, {"damping", to_json(p.damping)}, {"schedule", to_json(p.schedule)}};
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw DataError(DataError::Kind::kShape, std::string("JSON is missing field '") + key + "'", 0, key);
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::kShape, std::string("JSON field '") + key + "' has the wrong type", 0, key);
  }
}

}  // namespace detail

inline ImpedanceProfile profile_from_json(const json& j) {
  return ImpedanceProfile(detail::get<std::vector<double>>(j, "coeffs"), detail::get<double>(j, "swing"),
                          detail::get<double>(j, "stance_end"));
}

inline EquilibriumSchedule schedule_from_json(const json& j) {
  std::string label = j.contains("label") ? detail::get<std::string>(j, "label") : std::string{};
  return EquilibriumSchedule(detail::get<std::vector<double>>(j, "boundaries"),
                             detail::get<std::vector<double>>(j, "angles"), std::move(label));
}

inline ImpedanceParameters params_from_json(const json& j) {
  return ImpedanceParameters(profile_from_json(detail::field(j, "stiffness")),
                             profile_from_json(detail::field(j, "damping")),
                             schedule_from_json(detail::field(j, "schedule")));
}

// ---- reports ----------------------------------------------------------------

inline json to_json(const ValidationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back(
        {{"name", c.name}, {"satisfied", c.satisfied}, {"worst_violation", c.worst_violation}, {"phase", c.phase}});
  return {{"satisfied", r.satisfied()}, {"checks", checks}};
}

inline ValidationReport report_from_json(const json& j) {
  ValidationReport r;
  for (const auto& c : detail::field(j, "checks"))
    r.checks.push_back({detail::get<std::string>(c, "name"), detail::get<bool>(c, "satisfied"),
                        detail::get<double>(c, "worst_violation"), detail::get<double>(c, "phase")});
  return r;
}

inline json to_json(const FitMetrics& m) {
  return {{"rmse", m.rmse},
          {"peak_torque", m.peak_torque},
          {"peak_torque_phase", m.peak_torque_phase},
          {"peak_power", m.peak_power},
          {"peak_power_phase", m.peak_power_phase},
          {"pushoff_phase", m.pushoff_phase}};
}

inline json to_json(const TrendReport& t) {
  return {{"stiffness_peak_phase", t.stiffness_peak_phase},
          {"stiffness_peak", t.stiffness_peak},
          {"stiffness_at_zero", t.stiffness_at_zero},
          {"stiffness_peak_ratio", t.stiffness_peak_ratio},
          {"peak_in_stance", t.peak_in_stance},
          {"peak_exceeds_start", t.peak_exceeds_start},
          {"swing_stiffness", t.swing_stiffness},
          {"swing_constant", t.swing_constant},
          {"damping_early_max", t.damping_early_max},
          {"damping_early_max_phase", t.damping_early_max_phase},
          {"damping_terminal_min", t.damping_terminal_min},
          {"damping_terminal_min_phase", t.damping_terminal_min_phase},
          {"damping_early_exceeds_terminal", t.damping_early_exceeds_terminal}};
}

// ---- problem and result ----------------------------------------------------

inline json to_json(const EstimationProblem& p) {
  json bounds = json::array();
  for (const auto& b : p.angle_bounds) bounds.push_back({{"lo", b.lo}, {"hi", b.hi}});
  return {{"data",
           {{"phase", p.data.phase()},
            {"angle", p.data.angle()},
            {"velocity", p.data.velocity()},
            {"torque", p.data.torque()},
            {"joint", std::string(to_string(p.data.joint()))},
            {"units_note", p.data.units_note()}}},
          {"schedule", {{"boundaries", p.schedule.boundaries}, {"label", p.schedule.label}}},
          {"stiffness_order", p.stiffness_order},
          {"damping_order", p.damping_order},
          {"stance_end", p.stance_end},
          {"lipschitz_c", p.lipschitz_c},
          {"angle_bounds", bounds},
          {"fit_window", {{"begin", p.fit_window.begin}, {"end", p.fit_window.end}}},
          {"constraint_grid_n", p.constraint_grid_n},
          {"solver",
           {{"tol_rel", p.solver.tol_rel},
            {"max_iters", p.solver.max_iters},
            {"feasibility_tol", p.solver.feasibility_tol}}}};
}

inline EstimationProblem problem_from_json(const json& j) {
  const auto& d = detail::field(j, "data");
  GaitCycleData data(detail::get<std::vector<double>>(d, "phase"), detail::get<std::vector<double>>(d, "angle"),
                     detail::get<std::vector<double>>(d, "velocity"), detail::get<std::vector<double>>(d, "torque"),
                     joint_from_string(detail::get<std::string>(d, "joint")),
                     detail::get<std::string>(d, "units_note"));
  const auto& s = detail::field(j, "schedule");
  ProblemOptions opt;
  opt.stiffness_order = detail::get<int>(j, "stiffness_order");
  opt.damping_order = detail::get<int>(j, "damping_order");
  opt.stance_end = detail::get<double>(j, "stance_end");
  opt.lipschitz_c = detail::get<double>(j, "lipschitz_c");
  for (const auto& b : detail::field(j, "angle_bounds"))
    opt.angle_bounds.push_back({detail::get<double>(b, "lo"), detail::get<double>(b, "hi")});
  const auto& w = detail::field(j, "fit_window");
  opt.fit_window = {detail::get<double>(w, "begin"), detail::get<double>(w, "end")};
  opt.constraint_grid_n = detail::get<std::size_t>(j, "constraint_grid_n");
  const auto& so = detail::field(j, "solver");
  opt.solver = {detail::get<double>(so, "tol_rel"), detail::get<int>(so, "max_iters"),
                detail::get<double>(so, "feasibility_tol")};
  return build_problem(std::move(data),
                       {detail::get<std::vector<double>>(s, "boundaries"), detail::get<std::string>(s, "label")}, opt);
}

inline json to_json(const EstimationResult& r) {
  json trace = json::array();
  for (const auto& t : r.solver_trace)
    trace.push_back({{"iteration", t.iteration}, {"cost", t.cost}, {"worst_violation", t.worst_violation}});
  return {{"params", to_json(r.params)},
          {"cost", r.cost},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"constraint_report", to_json(r.constraint_report)},
          {"solver_trace", trace},
          {"seed", r.seed},
          {"start_index", r.start_index}};
}

inline EstimationResult result_from_json(const json& j) {
  EstimationResult r{params_from_json(detail::field(j, "params"))};
  r.cost = detail::get<double>(j, "cost");
  r.iterations = detail::get<int>(j, "iterations");
  r.converged = detail::get<bool>(j, "converged");
  r.constraint_report = report_from_json(detail::field(j, "constraint_report"));
  for (const auto& t : detail::field(j, "solver_trace"))
    r.solver_trace.push_back(
        {detail::get<int>(t, "iteration"), detail::get<double>(t, "cost"), detail::get<double>(t, "worst_violation")});
  r.seed = detail::get<std::uint64_t>(j, "seed");
  r.start_index = detail::get<std::size_t>(j, "start_index");
  return r;
}

// ---- tables ----------------------------------------------------------------

inline std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "iteration,cost,worst_violation\n";
  for (const auto& t : trace)
    out += std::to_string(t.iteration) + "," + format_double(t.cost) + "," + format_double(t.worst_violation) + "\n";
  return out;
}

namespace detail {

inline std::string join_doubles(const std::vector<double>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

inline const char* yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace detail

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out =
      "label,cost,angles,converged,constraints_satisfied,stiffness_peak_phase,stiffness_peak_ratio,"
      "peak_in_stance,peak_exceeds_start,damping_early_max,damping_terminal_min,damping_early_exceeds_terminal\n";
  for (const auto& r : rows) {
    const auto& t = r.trends;
    out += r.label + "," + format_double(r.cost) + "," + detail::join_doubles(r.angles, ";") + "," +
           detail::yes_no(r.converged) + "," + detail::yes_no(r.constraints_satisfied) + "," +
           format_double(t.stiffness_peak_phase) + "," + format_double(t.stiffness_peak_ratio) + "," +
           detail::yes_no(t.peak_in_stance) + "," + detail::yes_no(t.peak_exceeds_start) + "," +
           format_double(t.damping_early_max) + "," + format_double(t.damping_terminal_min) + "," +
           detail::yes_no(t.damping_early_exceeds_terminal) + "\n";
  }
  return out;
}

inline json comparison_json(const std::vector<ComparisonRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"label", r.label},
                   {"cost", r.cost},
                   {"angles", r.angles},
                   {"converged", r.converged},
                   {"constraints_satisfied", r.constraints_satisfied},
                   {"trends", to_json(r.trends)}});
  return out;
}

/// Aligned plain-text table.
inline std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"set", "cost", "equilibria (rad)", "converged", "feasible", "K peak phase", "K peak/K(0)", "D early>late"}};
  for (const auto& r : rows) {
    std::ostringstream cost, angles, phase, ratio;
    cost << std::fixed << std::setprecision(4) << r.cost;
    angles << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < r.angles.size(); ++i) angles << (i ? " " : "") << r.angles[i];
    phase << std::fixed << std::setprecision(3) << r.trends.stiffness_peak_phase;
    ratio << std::setprecision(4) << r.trends.stiffness_peak_ratio;
    cells.push_back({r.label, cost.str(), angles.str(), detail::yes_no(r.converged),
                     detail::yes_no(r.constraints_satisfied), phase.str(), ratio.str(),
                     detail::yes_no(r.trends.damping_early_exceeds_terminal)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

// ---- files -----------------------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::kMissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(DataError::Kind::kShape, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace impedance
