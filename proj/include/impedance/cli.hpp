#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "impedance/errors.hpp"
#include "impedance/estimator.hpp"
#include "impedance/gait_data.hpp"
#include "impedance/impedance_core.hpp"
#include "impedance/reference_sets.hpp"
#include "impedance/serialization.hpp"
#include "impedance/svg.hpp"
#include "impedance/tuning_eval.hpp"

namespace impedance::cli {

enum class Command { kEstimate, kEvaluate, kTune, kSynth, kReport };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolations = 2;

struct RunConfig {
  Command command = Command::kEstimate;

  std::string input;       // gait CSV
  std::string params;      // parameter JSON (evaluate, tune, synth)
  std::string fixture;     // published set A-D used in place of --params
  std::vector<std::string> results;  // result JSON files (report)
  std::string out = ".";

  std::string set;         // A-D
  std::vector<double> boundaries;
  std::optional<int> order_k;
  std::optional<int> order_d;
  double stance_end = kDefaultStanceEnd;
  std::optional<double> lipschitz;
  std::size_t starts = 8;
  std::uint64_t seed = 0;
  int max_iters = 200;
  std::string fit_window;  // "a:b"
  std::string angle_bounds;  // "lo:hi", applied to every section
  bool svg = false;

  std::string joint = "ankle";
  std::string phase_col = "phase_pct";
  std::string angle_col = "angle_rad";
  std::string velocity_col;
  std::string torque_col = "torque_nm";
  std::string phase_unit = "auto";
  double cycle_duration = 1.0;

  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  std::vector<double> angles;
  double noise = 0.0;
};

/// Reads a flat JSON object as CLI11 configuration. Keys are long option
/// names; arrays become repeated values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config values must be scalars or arrays of scalars");
  }
};

namespace detail {

inline PhaseWindow parse_window(const std::string& s, const char* what) {
  if (s.empty()) return {};
  auto pos = s.find(':');
  if (pos == std::string::npos) throw DomainError(std::string(what) + " must look like a:b");
  try {
    return {std::stod(s.substr(0, pos)), std::stod(s.substr(pos + 1))};
  } catch (const std::exception&) {
    throw DomainError(std::string(what) + " '" + s + "' is not a pair of numbers");
  }
}

inline PhaseUnit parse_phase_unit(const std::string& s) {
  if (s == "auto") return PhaseUnit::kAuto;
  if (s == "fraction") return PhaseUnit::kFraction;
  if (s == "percent") return PhaseUnit::kPercent;
  if (s == "sample") return PhaseUnit::kSample;
  throw DomainError("unknown phase unit '" + s + "'");
}

inline GaitCycleData load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw DomainError("--input is required");
  CsvSchema schema;
  schema.phase = cfg.phase_col;
  schema.angle = cfg.angle_col;
  schema.velocity = cfg.velocity_col;
  schema.torque = cfg.torque_col;
  schema.phase_unit = parse_phase_unit(cfg.phase_unit);
  schema.cycle_duration = cfg.cycle_duration;
  schema.joint = joint_from_string(cfg.joint);
  return load_gait_csv(cfg.input, schema);
}

inline char set_label(const std::string& s) {
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'D') throw DomainError("--set must be one of A, B, C, D");
  return s[0];
}

inline ScheduleSpec schedule_spec(const RunConfig& cfg) {
  if (!cfg.boundaries.empty()) return {cfg.boundaries, cfg.set.empty() ? "custom" : cfg.set};
  if (cfg.set.empty()) throw DomainError("give --set or --boundaries");
  const char label = set_label(cfg.set);
  return {reference::set(label).boundaries, std::string(1, label)};
}

/// Knee flexion runs well past 0.5 rad, so its default upper bound is wider.
inline AngleBound default_bound(JointLabel joint) {
  return joint == JointLabel::kKnee ? AngleBound{-0.5, 1.0} : AngleBound{};
}

inline EstimationProblem problem_from_config(const RunConfig& cfg, GaitCycleData data) {
  auto spec = schedule_spec(cfg);
  ProblemOptions opt;
  opt.stiffness_order = cfg.order_k;
  opt.damping_order = cfg.order_d;
  opt.stance_end = cfg.stance_end;
  opt.lipschitz_c = cfg.lipschitz;
  opt.fit_window = parse_window(cfg.fit_window, "--fit-window");
  opt.solver.max_iters = cfg.max_iters;
  AngleBound bound = default_bound(data.joint());
  if (!cfg.angle_bounds.empty()) {
    auto w = parse_window(cfg.angle_bounds, "--angle-bounds");
    bound = {w.begin, w.end};
  }
  opt.angle_bounds.assign(spec.boundaries.size() - 1, bound);
  return build_problem(std::move(data), std::move(spec), opt);
}

inline ImpedanceParameters load_params(const RunConfig& cfg) {
  if (!cfg.fixture.empty()) return reference::parameters(set_label(cfg.fixture), cfg.stance_end);
  if (cfg.params.empty()) throw DomainError("give --params or --fixture");
  return params_from_json(read_json(cfg.params));
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
  std::filesystem::path dir = cfg.out.empty() ? "." : cfg.out;
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string report_text(const EstimationProblem& prob, const EstimationResult& r) {
  std::ostringstream s;
  s << "schedule " << prob.schedule.label << " (" << prob.sections() << " sections)\n";
  s << "orders K=" << prob.stiffness_order << " D=" << prob.damping_order << "  stance_end=" << prob.stance_end
    << "  lipschitz_c=" << format_double(prob.lipschitz_c) << "\n";
  s << "fit window [" << prob.fit_window.begin << ", " << prob.fit_window.end << "]\n";
  s << "cost " << format_double(r.cost) << "  iterations " << r.iterations
    << "  converged " << (r.converged ? "yes" : "no") << "  start " << r.start_index << "\n";
  s << "equilibria";
  for (double a : r.params.schedule.angles()) s << " " << format_double(a);
  s << "\nconstraints\n";
  for (const auto& c : r.constraint_report.checks)
    s << "  " << c.name << ": " << (c.satisfied ? "ok" : "VIOLATED") << "  worst " << format_double(c.worst_violation)
      << " at " << format_double(c.phase) << "\n";
  const auto m = metrics(r.params, prob.data);
  s << "metrics\n" << "  rmse " << format_double(m.rmse) << "\n  peak torque " << format_double(m.peak_torque)
    << " at " << format_double(m.peak_torque_phase) << "\n  peak power " << format_double(m.peak_power) << " at "
    << format_double(m.peak_power_phase) << "\n  push-off phase " << format_double(m.pushoff_phase) << "\n";
  const auto t = trend_report(r.params);
  s << "trends\n  stiffness peak " << format_double(t.stiffness_peak) << " at " << format_double(t.stiffness_peak_phase)
    << " (K(0) " << format_double(t.stiffness_at_zero) << ")\n  damping early max "
    << format_double(t.damping_early_max) << ", terminal min " << format_double(t.damping_terminal_min) << "\n";
  return s.str();
}

}  // namespace detail

inline int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  auto prob = detail::problem_from_config(cfg, detail::load_input(cfg));
  const auto r = multi_start(prob, cfg.starts, cfg.seed);
  const auto dir = detail::out_dir(cfg);
  write_json(dir / "params.json", to_json(r.params));
  write_json(dir / "result.json", to_json(r));
  write_text(dir / "trace.csv", trace_csv(r.solver_trace));
  const auto report = detail::report_text(prob, r);
  write_text(dir / "report.txt", report);
  out << report;
  // Unconverged runs are reported like violated ones: usable but not trusted.
  return r.converged && r.feasible() ? kExitOk : kExitViolations;
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const auto p = detail::load_params(cfg);
  const auto data = detail::load_input(cfg);
  const auto tau = torque_trajectory(p, data);
  const auto power = joint_power(tau, data.velocity());
  const std::size_t n = data.size();
  std::vector<double> k(n), d(n), eq(n);
  std::string csv = "phase,K,D,theta_eq,tau_model,tau_data,power\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double t = data.phase()[i];
    k[i] = eval_profile(p.stiffness, t);
    d[i] = eval_profile(p.damping, t);
    eq[i] = equilibrium_at(p.schedule, t);
    csv += format_double(t) + "," + format_double(k[i]) + "," + format_double(d[i]) + "," + format_double(eq[i]) +
           "," + format_double(tau[i]) + "," + format_double(data.torque()[i]) + "," + format_double(power[i]) + "\n";
  }
  const auto dir = detail::out_dir(cfg);
  write_text(dir / "curves.csv", csv);
  const auto m = metrics(p, data);
  write_json(dir / "metrics.json", {{"metrics", to_json(m)}, {"trends", to_json(trend_report(p))}});
  if (cfg.svg) {
    const auto& ph = data.phase();
    write_text(dir / "stiffness.svg", svg::render({"Stiffness", "gait phase", "K (N m/rad)", {{"K", ph, k}}}));
    write_text(dir / "damping.svg", svg::render({"Damping", "gait phase", "D (N m s/rad)", {{"D", ph, d}}}));
    write_text(dir / "torque.svg", svg::render({"Torque", "gait phase", "torque (N m)",
                                                {{"data", ph, data.torque()}, {"model", ph, tau}}}));
  }
  out << "rmse " << format_double(m.rmse) << "\n";
  return kExitOk;
}

inline int cmd_tune(const RunConfig& cfg, std::ostream& out) {
  TuningSpec spec{cfg.alpha, cfg.beta, cfg.gamma};
  if (!cfg.angles.empty()) spec.tuned_angles = cfg.angles;
  const auto tuned = tune(detail::load_params(cfg), spec);
  const auto dir = detail::out_dir(cfg);
  write_json(dir / "params.json", to_json(tuned));
  out << "K(0) " << format_double(eval_profile(tuned.stiffness, 0.0)) << "\n";
  return kExitOk;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto p = detail::load_params(cfg);
  const auto kin = detail::load_input(cfg);
  const auto d = synthesize({p, kin, cfg.noise, cfg.seed});
  std::string csv = "phase,angle,velocity,torque\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    csv += format_double(d.phase()[i]) + "," + format_double(d.angle()[i]) + "," + format_double(d.velocity()[i]) +
           "," + format_double(d.torque()[i]) + "\n";
  write_text(detail::out_dir(cfg) / "synthetic.csv", csv);
  out << d.size() << " samples\n";
  return kExitOk;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& out) {
  std::vector<EstimationResult> results;
  for (const auto& path : cfg.results) results.push_back(result_from_json(read_json(path)));
  const auto rows = compare_sets(results);
  const auto dir = detail::out_dir(cfg);
  const auto text = comparison_text(rows);
  write_text(dir / "comparison.txt", text);
  write_text(dir / "comparison.csv", comparison_csv(rows));
  write_json(dir / "comparison.json", comparison_json(rows));
  out << text;
  return kExitOk;
}

inline int dispatch(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.command) {
    case Command::kEstimate: return cmd_estimate(cfg, out);
    case Command::kEvaluate: return cmd_evaluate(cfg, out);
    case Command::kTune: return cmd_tune(cfg, out);
    case Command::kSynth: return cmd_synth(cfg, out);
    case Command::kReport: return cmd_report(cfg, out);
  }
  return kExitError;
}

/// Parses arguments (argv[0] is the program name) and runs the command.
/// Every failure is printed to `err` and mapped to exit code 1.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Estimate, evaluate and tune phase-varying joint impedance from gait data"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file supplying any option; command-line flags win");

  std::string command;
  app.add_option("command", command, "estimate | evaluate | tune | synth | report")
      ->required()
      ->check(CLI::IsMember({"estimate", "evaluate", "tune", "synth", "report"}));
  app.add_option("--input", cfg.input, "gait CSV (estimate, evaluate) or kinematics CSV (synth)");
  app.add_option("--params", cfg.params, "parameter JSON");
  app.add_option("--fixture", cfg.fixture, "use the published parameters of set A-D");
  app.add_option("--results", cfg.results, "result JSON files to compare")->delimiter(',');
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  app.add_option("--set", cfg.set, "equilibrium sectioning A-D");
  app.add_option("--boundaries", cfg.boundaries, "custom section boundaries, e.g. 0,0.4,0.63,1")->delimiter(',');
  app.add_option("--order-k", cfg.order_k, "stiffness polynomial order (default 4)");
  app.add_option("--order-d", cfg.order_d, "damping polynomial order (default 4)");
  app.add_option("--stance-end", cfg.stance_end, "stance/swing boundary")->capture_default_str();
  app.add_option("--lipschitz", cfg.lipschitz, "torque rate bound per unit phase (default: twice the data's)");
  app.add_option("--starts", cfg.starts, "random starts")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "base seed")->capture_default_str();
  app.add_option("--max-iters", cfg.max_iters, "iteration cap per start")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--fit-window", cfg.fit_window, "phase window a:b used in the fit");
  app.add_option("--angle-bounds", cfg.angle_bounds, "equilibrium bounds lo:hi in rad");
  app.add_flag("--svg", cfg.svg, "also write SVG charts (evaluate)");
  app.add_option("--joint", cfg.joint, "ankle | knee | other")->capture_default_str();
  app.add_option("--phase-col", cfg.phase_col)->capture_default_str();
  app.add_option("--angle-col", cfg.angle_col)->capture_default_str();
  app.add_option("--velocity-col", cfg.velocity_col, "empty: differentiate the angle");
  app.add_option("--torque-col", cfg.torque_col)->capture_default_str();
  app.add_option("--phase-unit", cfg.phase_unit, "auto | fraction | percent | sample")->capture_default_str();
  app.add_option("--cycle-duration", cfg.cycle_duration, "seconds per cycle")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "stiffness scale")->capture_default_str();
  app.add_option("--beta", cfg.beta, "damping scale")->capture_default_str();
  app.add_option("--gamma", cfg.gamma, "stiffness offset")->capture_default_str();
  app.add_option("--angles", cfg.angles, "tuned equilibria, one per section")->delimiter(',');
  app.add_option("--noise", cfg.noise, "Gaussian torque noise std (synth)")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  if (command == "estimate") cfg.command = Command::kEstimate;
  else if (command == "evaluate") cfg.command = Command::kEvaluate;
  else if (command == "tune") cfg.command = Command::kTune;
  else if (command == "synth") cfg.command = Command::kSynth;
  else cfg.command = Command::kReport;

  try {
    return dispatch(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace impedance::cli
