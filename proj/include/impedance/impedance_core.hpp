#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impedance/errors.hpp"
#include "impedance/gait_cycle.hpp"

namespace impedance {

inline constexpr double kDefaultStanceEnd = 0.63;

inline void require_phase(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phase " + std::to_string(t) + " outside [0, 1]");
}

/// Piecewise stiffness or damping curve: a polynomial in raw phase t over
/// stance [0, stance_end) and a constant over swing [stance_end, 1].
///
/// The swing constant always equals the constant coefficient so that the
/// value at t = 0 and t = 1 agree.
class ImpedanceProfile {
 public:
  /// Coefficients in ascending powers of t.
  explicit ImpedanceProfile(std::vector<double> coeffs, double stance_end = kDefaultStanceEnd)
      : coeffs_(std::move(coeffs)), stance_end_(stance_end) {
    if (coeffs_.empty()) throw InvariantError("profile needs at least one coefficient");
    swing_ = coeffs_.front();
    check();
  }

  /// Rejects a swing value that differs from coeffs[0].
  ImpedanceProfile(std::vector<double> coeffs, double swing_value, double stance_end)
      : ImpedanceProfile(std::move(coeffs), stance_end) {
    if (swing_value != swing_) throw InvariantError("swing value must equal the constant coefficient");
  }

  static ImpedanceProfile constant(double value, double stance_end = kDefaultStanceEnd) {
    return ImpedanceProfile({value}, stance_end);
  }

  /// Table-style input: highest power first.
  static ImpedanceProfile from_descending(std::vector<double> coeffs, double stance_end = kDefaultStanceEnd) {
    std::reverse(coeffs.begin(), coeffs.end());
    return ImpedanceProfile(std::move(coeffs), stance_end);
  }

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  double swing_value() const noexcept { return swing_; }
  double stance_end() const noexcept { return stance_end_; }
  int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }

  /// Stance polynomial evaluated without the stance/swing switch.
  double polynomial(double t) const noexcept {
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * t + *it;
    return v;
  }

  bool operator==(const ImpedanceProfile&) const = default;

 private:
  void check() const {
    if (!(stance_end_ > 0.0 && stance_end_ < 1.0)) throw InvariantError("stance_end must lie in (0, 1)");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw InvariantError("profile coefficient is not finite");
  }

  std::vector<double> coeffs_;
  double swing_ = 0.0;
  double stance_end_;
};

inline double eval_profile(const ImpedanceProfile& p, double t) {
  require_phase(t);
  return t < p.stance_end() ? p.polynomial(t) : p.swing_value();
}

/// Piecewise-constant equilibrium angle over gait sections
/// [b0, b1), [b1, b2), ..., [b_{s-1}, 1].
class EquilibriumSchedule {
 public:
  EquilibriumSchedule(std::vector<double> boundaries, std::vector<double> angles, std::string label = {})
      : boundaries_(std::move(boundaries)), angles_(std::move(angles)), label_(std::move(label)) {
    check_boundaries(boundaries_);
    if (angles_.size() + 1 != boundaries_.size())
      throw InvariantError("schedule needs exactly one angle per section");
    for (double a : angles_)
      if (!std::isfinite(a)) throw InvariantError("equilibrium angle is not finite");
  }

  static void check_boundaries(std::span<const double> b) {
    if (b.size() < 2) throw InvariantError("schedule needs at least one section");
    if (b.front() != 0.0 || b.back() != 1.0) throw InvariantError("section boundaries must start at 0 and end at 1");
    for (std::size_t i = 1; i < b.size(); ++i)
      if (!(b[i] > b[i - 1])) throw InvariantError("section boundaries must be strictly increasing");
  }

  const std::vector<double>& boundaries() const noexcept { return boundaries_; }
  const std::vector<double>& angles() const noexcept { return angles_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t sections() const noexcept { return angles_.size(); }

  /// Index of the section containing t (half-open, last section closed).
  std::size_t section_of(double t) const {
    require_phase(t);
    auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), t);
    auto idx = static_cast<std::size_t>(it - boundaries_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, sections() - 1);
  }

  EquilibriumSchedule with_angles(std::vector<double> angles) const {
    return EquilibriumSchedule(boundaries_, std::move(angles), label_);
  }

  bool operator==(const EquilibriumSchedule&) const = default;

 private:
  std::vector<double> boundaries_;
  std::vector<double> angles_;
  std::string label_;
};

inline double equilibrium_at(const EquilibriumSchedule& s, double t) { return s.angles()[s.section_of(t)]; }

/// Complete controller description: tau = K(t) (theta - theta_eq(t)) + D(t) theta_dot.
struct ImpedanceParameters {
  ImpedanceProfile stiffness;
  ImpedanceProfile damping;
  EquilibriumSchedule schedule;

  ImpedanceParameters(ImpedanceProfile k, ImpedanceProfile d, EquilibriumSchedule s)
      : stiffness(std::move(k)), damping(std::move(d)), schedule(std::move(s)) {
    if (stiffness.stance_end() != damping.stance_end())
      throw InvariantError("stiffness and damping must share stance_end");
  }

  double stance_end() const noexcept { return stiffness.stance_end(); }

  bool operator==(const ImpedanceParameters&) const = default;
};

inline double impedance_torque(const ImpedanceParameters& p, double angle, double velocity, double t) {
  return eval_profile(p.stiffness, t) * (angle - equilibrium_at(p.schedule, t)) + eval_profile(p.damping, t) * velocity;
}

inline std::vector<double> torque_trajectory(const ImpedanceParameters& p, const GaitCycleData& d) {
  std::vector<double> tau(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    tau[i] = impedance_torque(p, d.angle()[i], d.velocity()[i], d.phase()[i]);
  return tau;
}

inline std::vector<double> joint_power(std::span<const double> torque, std::span<const double> velocity) {
  if (torque.size() != velocity.size()) throw DomainError("torque and velocity lengths differ");
  std::vector<double> p(torque.size());
  std::transform(torque.begin(), torque.end(), velocity.begin(), p.begin(), std::multiplies<>{});
  return p;
}

struct ConstraintCheck {
  std::string name;
  bool satisfied = true;
  double worst_violation = 0.0;  // >= 0; 0 when satisfied
  double phase = 0.0;            // where the worst value occurs
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;

  bool satisfied() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.satisfied; });
  }
  const ConstraintCheck* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline ConstraintCheck positivity_check(std::string name, const ImpedanceProfile& p, std::size_t grid_n,
                                        double tolerance) {
  ConstraintCheck c{std::move(name)};
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_n; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(grid_n - 1);
    double v = eval_profile(p, t);
    if (v < worst) {
      worst = v;
      c.phase = t;
    }
  }
  c.worst_violation = std::max(0.0, -worst);
  c.satisfied = worst >= -tolerance;
  return c;
}

inline ConstraintCheck continuity_check(std::string name, const ImpedanceProfile& p) {
  ConstraintCheck c{std::move(name)};
  double gap = std::abs(eval_profile(p, 0.0) - eval_profile(p, 1.0));
  c.worst_violation = gap;
  c.satisfied = gap == 0.0;
  return c;
}

}  // namespace detail

/// Positivity of K and D on a uniform grid of grid_n points over [0, 1]
/// and exact cycle continuity K(0) = K(1), D(0) = D(1). Values down to
/// -tolerance count as satisfied.
inline ValidationReport validate(const ImpedanceParameters& p, std::size_t grid_n, double tolerance = 0.0) {
  if (grid_n < 2) throw DomainError("validation grid needs at least 2 points");
  ValidationReport r;
  r.checks.push_back(detail::positivity_check("stiffness_positivity", p.stiffness, grid_n, tolerance));
  r.checks.push_back(detail::positivity_check("damping_positivity", p.damping, grid_n, tolerance));
  r.checks.push_back(detail::continuity_check("stiffness_continuity", p.stiffness));
  r.checks.push_back(detail::continuity_check("damping_continuity", p.damping));
  return r;
}

}  // namespace impedance
