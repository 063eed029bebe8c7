#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impedance/errors.hpp"
#include "impedance/estimator.hpp"
#include "impedance/gait_cycle.hpp"
#include "impedance/impedance_core.hpp"

namespace impedance {

/// Experimental retuning: K' = alpha K + gamma, D' = beta D, with optional
/// replacement equilibrium angles.
struct TuningSpec {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  std::optional<std::vector<double>> tuned_angles;
};

inline ImpedanceParameters tune(const ImpedanceParameters& p, const TuningSpec& spec) {
  if (!(spec.alpha >= 0.0 && spec.beta >= 0.0 && spec.gamma >= 0.0))
    throw InvariantError("tuning factors alpha, beta, gamma must be >= 0");
  auto k = p.stiffness.coeffs();
  for (double& c : k) c *= spec.alpha;
  k.front() += spec.gamma;  // shifts stance curve and swing constant alike
  auto d = p.damping.coeffs();
  for (double& c : d) c *= spec.beta;

  auto schedule = p.schedule;
  if (spec.tuned_angles) {
    if (spec.tuned_angles->size() != schedule.sections())
      throw DomainError("tuned angles must give one value per section");
    schedule = schedule.with_angles(*spec.tuned_angles);
  }
  return ImpedanceParameters(ImpedanceProfile(std::move(k), p.stance_end()),
                             ImpedanceProfile(std::move(d), p.stance_end()), std::move(schedule));
}

inline constexpr double kPushoffBegin = 0.40;
inline constexpr double kPushoffEnd = 0.70;

struct FitMetrics {
  double rmse = 0.0;
  double peak_torque = 0.0;  // signed value of largest |tau|
  double peak_torque_phase = 0.0;
  double peak_power = 0.0;  // signed value of largest |tau * theta_dot|
  double peak_power_phase = 0.0;
  double pushoff_phase = 0.0;  // phase of largest |power| in [0.40, 0.70]
};

/// Metrics from already evaluated series. Peaks are taken by magnitude;
/// ties resolve to the earliest sample.
inline FitMetrics metrics_from_series(std::span<const double> phase, std::span<const double> tau_model,
                                      std::span<const double> tau_data, std::span<const double> velocity) {
  const std::size_t n = phase.size();
  if (tau_model.size() != n || tau_data.size() != n || velocity.size() != n || n == 0)
    throw DomainError("metric series must be nonempty and equally long");
  FitMetrics m;
  double ss = 0.0;
  double best_tau = -1.0, best_pow = -1.0, best_push = -1.0;
  const auto power = joint_power(tau_model, velocity);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = tau_data[i] - tau_model[i];
    ss += r * r;
    if (std::abs(tau_model[i]) > best_tau) {
      best_tau = std::abs(tau_model[i]);
      m.peak_torque = tau_model[i];
      m.peak_torque_phase = phase[i];
    }
    if (std::abs(power[i]) > best_pow) {
      best_pow = std::abs(power[i]);
      m.peak_power = power[i];
      m.peak_power_phase = phase[i];
    }
    if (phase[i] >= kPushoffBegin && phase[i] <= kPushoffEnd && std::abs(power[i]) > best_push) {
      best_push = std::abs(power[i]);
      m.pushoff_phase = phase[i];
    }
  }
  m.rmse = std::sqrt(ss / static_cast<double>(n));
  return m;
}

inline FitMetrics metrics(const ImpedanceParameters& p, const GaitCycleData& d) {
  const auto tau = torque_trajectory(p, d);
  return metrics_from_series(d.phase(), tau, d.torque(), d.velocity());
}

/// Shape checks on the stiffness and damping curves, each with its numbers.
struct TrendReport {
  double stiffness_peak_phase = 0.0;
  double stiffness_peak = 0.0;
  double stiffness_at_zero = 0.0;
  double stiffness_peak_ratio = 1.0;  // K(peak) / K(0); infinite when K(0) = 0 < K(peak)
  bool peak_in_stance = false;        // 0 < peak phase < stance_end
  bool peak_exceeds_start = false;    // K(peak) > K(0)
  double swing_stiffness = 0.0;
  bool swing_constant = true;         // true by construction of the profile
  double damping_early_max = 0.0;     // max over [0, 0.40)
  double damping_early_max_phase = 0.0;
  double damping_terminal_min = 0.0;  // min over [0.40, stance_end)
  double damping_terminal_min_phase = 0.0;
  bool damping_early_exceeds_terminal = false;
};

inline TrendReport trend_report(const ImpedanceParameters& p, std::size_t grid_n = 1001) {
  if (grid_n < 10) throw DomainError("trend grid needs at least 10 points");
  TrendReport r;
  const double se = p.stance_end();
  r.stiffness_at_zero = eval_profile(p.stiffness, 0.0);
  r.stiffness_peak = -std::numeric_limits<double>::infinity();
  r.damping_early_max = -std::numeric_limits<double>::infinity();
  r.damping_terminal_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid_n - 1);
    if (t >= se) break;
    const double k = eval_profile(p.stiffness, t);
    const double d = eval_profile(p.damping, t);
    if (k > r.stiffness_peak) {
      r.stiffness_peak = k;
      r.stiffness_peak_phase = t;
    }
    if (t < kPushoffBegin && d > r.damping_early_max) {
      r.damping_early_max = d;
      r.damping_early_max_phase = t;
    }
    if (t >= kPushoffBegin && d < r.damping_terminal_min) {
      r.damping_terminal_min = d;
      r.damping_terminal_min_phase = t;
    }
  }
  if (r.stiffness_at_zero != 0.0)
    r.stiffness_peak_ratio = r.stiffness_peak / r.stiffness_at_zero;
  else
    r.stiffness_peak_ratio = r.stiffness_peak > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  r.peak_in_stance = r.stiffness_peak_phase > 0.0 && r.stiffness_peak_phase < se;
  r.peak_exceeds_start = r.stiffness_peak > r.stiffness_at_zero;
  r.swing_stiffness = p.stiffness.swing_value();
  r.swing_constant = true;
  r.damping_early_exceeds_terminal =
      std::isfinite(r.damping_terminal_min) && r.damping_early_max > r.damping_terminal_min;
  return r;
}

struct ComparisonRow {
  std::string label;
  double cost = 0.0;
  std::vector<double> angles;
  bool converged = false;
  bool constraints_satisfied = false;
  TrendReport trends;
};

inline std::vector<ComparisonRow> compare_sets(std::span<const EstimationResult> results, std::size_t grid_n = 1001) {
  if (results.empty()) throw DomainError("nothing to compare");
  std::vector<ComparisonRow> rows;
  for (const auto& r : results) {
    rows.push_back({r.params.schedule.label(), r.cost, r.params.schedule.angles(), r.converged, r.feasible(),
                    trend_report(r.params, grid_n)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return rows;
}

}  // namespace impedance
