#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <utility>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "impedance/errors.hpp"
#include "impedance/gait_cycle.hpp"
#include "impedance/impedance_core.hpp"
#include "impedance/qp.hpp"

namespace impedance {

struct PhaseWindow {
  double begin = 0.0;
  double end = 1.0;

  bool contains(double t) const noexcept { return t >= begin && t <= end; }
};

struct AngleBound {
  double lo = -0.5;
  double hi = 0.5;
};

struct ScheduleSpec {
  std::vector<double> boundaries;
  std::string label;
};

struct SolverOptions {
  double tol_rel = 1e-8;
  int max_iters = 200;
  double feasibility_tol = 1e-9;
};

/// One constrained least-squares instance: fit stance polynomials of order
/// (stiffness_order, damping_order) and one equilibrium angle per schedule
/// section to the torque samples inside fit_window.
struct EstimationProblem {
  GaitCycleData data;
  ScheduleSpec schedule;
  int stiffness_order = 4;
  int damping_order = 4;
  double stance_end = kDefaultStanceEnd;
  double lipschitz_c = 1.0;  // torque units per unit phase
  std::vector<AngleBound> angle_bounds;  // one per section
  PhaseWindow fit_window;
  std::size_t constraint_grid_n = 1001;
  SolverOptions solver;

  std::size_t sections() const noexcept { return schedule.boundaries.size() - 1; }
};

struct ProblemOptions {
  std::optional<int> stiffness_order;
  std::optional<int> damping_order;
  double stance_end = kDefaultStanceEnd;
  std::optional<double> lipschitz_c;
  std::vector<AngleBound> angle_bounds;  // empty: [-0.5, 0.5] per section
  PhaseWindow fit_window;
  std::size_t constraint_grid_n = 1001;
  SolverOptions solver;
};

struct TraceEntry {
  int iteration = 0;
  double cost = 0.0;
  double worst_violation = 0.0;
};

struct EstimationResult {
  ImpedanceParameters params;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  ValidationReport constraint_report;
  std::vector<TraceEntry> solver_trace;
  std::uint64_t seed = 0;
  std::size_t start_index = 0;

  bool feasible() const { return constraint_report.satisfied(); }
};

/// max over consecutive samples of |d tau / d phase| - c; <= 0 means the
/// Lipschitz bound holds everywhere.
inline double lipschitz_margin(std::span<const double> tau, std::span<const double> phase, double c) {
  if (tau.size() != phase.size()) throw DomainError("torque and phase lengths differ");
  if (tau.size() < 2) throw DomainError("Lipschitz margin needs at least 2 samples");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tau.size(); ++i)
    worst = std::max(worst, std::abs((tau[i + 1] - tau[i]) / (phase[i + 1] - phase[i])) - c);
  return worst;
}

namespace detail {

inline std::vector<std::size_t> window_indices(const GaitCycleData& d, const PhaseWindow& w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (w.contains(d.phase()[i])) idx.push_back(i);
  return idx;
}

}  // namespace detail

/// Euclidean norm of the torque residual over samples inside the window.
inline double fit_cost(const ImpedanceParameters& p, const GaitCycleData& d, const PhaseWindow& window = {}) {
  auto idx = detail::window_indices(d, window);
  if (idx.empty()) throw DomainError("fit window contains no samples");
  double ss = 0.0;
  for (std::size_t i : idx) {
    const double r = d.torque()[i] - impedance_torque(p, d.angle()[i], d.velocity()[i], d.phase()[i]);
    ss += r * r;
  }
  return std::sqrt(ss);
}

inline EstimationProblem build_problem(GaitCycleData data, ScheduleSpec schedule, const ProblemOptions& opt = {}) {
  EquilibriumSchedule::check_boundaries(schedule.boundaries);
  if (!(opt.fit_window.begin >= 0.0 && opt.fit_window.end <= 1.0 && opt.fit_window.begin < opt.fit_window.end))
    throw DomainError("fit window must be a nonempty interval inside [0, 1]");
  if (!(opt.stance_end > 0.0 && opt.stance_end < 1.0)) throw DomainError("stance_end must lie in (0, 1)");
  if (opt.constraint_grid_n < 2) throw DomainError("constraint grid needs at least 2 points");

  const auto idx = detail::window_indices(data, opt.fit_window);
  if (idx.empty()) throw DomainError("fit window contains no samples");

  const std::size_t sections = schedule.boundaries.size() - 1;
  std::vector<AngleBound> bounds = opt.angle_bounds;
  if (bounds.empty()) bounds.assign(sections, AngleBound{});
  if (bounds.size() != sections) throw DomainError("need one angle bound per schedule section");
  for (const auto& b : bounds)
    if (!(b.lo <= b.hi)) throw DomainError("angle bound has lo > hi");

  double c = 0.0;
  if (opt.lipschitz_c) {
    c = *opt.lipschitz_c;
  } else {
    const auto& tau = data.torque();
    const auto& ph = data.phase();
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const std::size_t i = idx[k], j = idx[k + 1];
      c = std::max(c, std::abs((tau[j] - tau[i]) / (ph[j] - ph[i])));
    }
    c *= 2.0;
    if (c == 0.0) c = 1.0;
  }
  if (!(c > 0.0)) throw DomainError("Lipschitz constant must be positive");

  EstimationProblem p{std::move(data), std::move(schedule)};
  p.stiffness_order = opt.stiffness_order.value_or(4);
  p.damping_order = opt.damping_order.value_or(4);
  if (p.stiffness_order < 0 || p.damping_order < 0) throw DomainError("polynomial orders must be >= 0");
  p.stance_end = opt.stance_end;
  p.lipschitz_c = c;
  p.angle_bounds = std::move(bounds);
  p.fit_window = opt.fit_window;
  p.constraint_grid_n = opt.constraint_grid_n;
  p.solver = opt.solver;
  return p;
}

namespace detail {

/// Precomputed per-problem data shared by both alternation half-steps.
class AlternatingSolver {
 public:
  explicit AlternatingSolver(const EstimationProblem& prob)
      : prob_(prob),
        idx_(window_indices(prob.data, prob.fit_window)),
        nk_(prob.stiffness_order + 1),
        nd_(prob.damping_order + 1),
        sched_(prob.schedule.boundaries, std::vector<double>(prob.sections(), 0.0), prob.schedule.label) {
    for (double t : prob.data.phase()) section_.push_back(sched_.section_of(t));
    has_samples_.assign(prob.sections(), false);
    for (std::size_t i : idx_) has_samples_[section_[i]] = true;
    for (std::size_t g = 0; g < prob.constraint_grid_n; ++g) {
      const double t = static_cast<double>(g) / static_cast<double>(prob.constraint_grid_n - 1);
      if (t < prob.stance_end) grid_.push_back(t);
    }
    double ss = 0.0;
    for (std::size_t i : idx_) ss += prob.data.torque()[i] * prob.data.torque()[i];
    data_norm_ = std::sqrt(ss);
  }

  double basis(int j, double t) const {
    if (t >= prob_.stance_end) return j == 0 ? 1.0 : 0.0;
    return std::pow(t, j);
  }

  ImpedanceParameters make_params(const Eigen::VectorXd& coeffs, const std::vector<double>& angles) const {
    std::vector<double> k(coeffs.data(), coeffs.data() + nk_);
    std::vector<double> d(coeffs.data() + nk_, coeffs.data() + nk_ + nd_);
    return ImpedanceParameters(ImpedanceProfile(std::move(k), prob_.stance_end),
                               ImpedanceProfile(std::move(d), prob_.stance_end), sched_.with_angles(angles));
  }

  /// Torque-model rows over in-window samples for fixed angles.
  Eigen::MatrixXd design(const std::vector<double>& angles) const {
    const auto& d = prob_.data;
    Eigen::MatrixXd Phi(static_cast<Eigen::Index>(idx_.size()), nk_ + nd_);
    for (std::size_t r = 0; r < idx_.size(); ++r) {
      const std::size_t i = idx_[r];
      const double t = d.phase()[i];
      const double dev = d.angle()[i] - angles[section_[i]];
      for (int j = 0; j < nk_; ++j) Phi(static_cast<Eigen::Index>(r), j) = basis(j, t) * dev;
      for (int j = 0; j < nd_; ++j) Phi(static_cast<Eigen::Index>(r), nk_ + j) = basis(j, t) * d.velocity()[i];
    }
    return Phi;
  }

  Eigen::VectorXd target() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx_.size()));
    for (std::size_t r = 0; r < idx_.size(); ++r) y(static_cast<Eigen::Index>(r)) = prob_.data.torque()[idx_[r]];
    return y;
  }

  /// Half-step (a): coefficients with angles fixed.
  Eigen::VectorXd solve_coefficients(const std::vector<double>& angles) const {
    const Eigen::MatrixXd Phi = design(angles);
    const Eigen::VectorXd y = target();
    const int nv = nk_ + nd_;

    // Column scaling for conditioning; x = S z.
    Eigen::VectorXd s(nv);
    for (int j = 0; j < nv; ++j) {
      const double nrm = Phi.col(j).norm();
      s(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
    }
    const Eigen::MatrixXd Ps = Phi * s.asDiagonal();

    const auto ng = static_cast<Eigen::Index>(grid_.size());
    const auto nl = idx_.size() > 1 ? static_cast<Eigen::Index>(idx_.size() - 1) : 0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * ng + 2 * nl, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * ng + 2 * nl);
    for (Eigen::Index g = 0; g < ng; ++g) {
      const double t = grid_[static_cast<std::size_t>(g)];
      for (int j = 0; j < nk_; ++j) A(g, j) = -basis(j, t) * s(j);
      for (int j = 0; j < nd_; ++j) A(ng + g, nk_ + j) = -basis(j, t) * s(nk_ + j);
    }
    for (Eigen::Index r = 0; r < nl; ++r) {
      const double dt = prob_.data.phase()[idx_[static_cast<std::size_t>(r) + 1]] -
                        prob_.data.phase()[idx_[static_cast<std::size_t>(r)]];
      A.row(2 * ng + 2 * r) = Ps.row(r + 1) - Ps.row(r);
      A.row(2 * ng + 2 * r + 1) = -(Ps.row(r + 1) - Ps.row(r));
      b(2 * ng + 2 * r) = b(2 * ng + 2 * r + 1) = prob_.lipschitz_c * dt;
    }
    const Eigen::MatrixXd H = Ps.transpose() * Ps;
    const Eigen::VectorXd g = -Ps.transpose() * y;
    auto res = solve_qp(H, g, A, b);
    return s.asDiagonal() * res.x;
  }

  /// Half-step (b): angles with coefficients fixed. Sections without any
  /// in-window sample keep their current angle.
  std::vector<double> solve_angles(const Eigen::VectorXd& coeffs, const std::vector<double>& angles) const {
    const auto params = make_params(coeffs, angles);
    const auto& d = prob_.data;
    std::vector<int> var(prob_.sections(), -1);
    int nv = 0;
    for (std::size_t s = 0; s < prob_.sections(); ++s)
      if (has_samples_[s]) var[s] = nv++;
    if (nv == 0) return angles;

    // tau_i = base_i - K_i * theta_eq[s(i)] with base_i = K_i theta_i + D_i theta_dot_i.
    const std::size_t n = idx_.size();
    std::vector<double> K(n), base(n), fixed(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = idx_[r];
      const double t = d.phase()[i];
      K[r] = eval_profile(params.stiffness, t);
      base[r] = K[r] * d.angle()[i] + eval_profile(params.damping, t) * d.velocity()[i];
      fixed[r] = var[section_[i]] < 0 ? base[r] - K[r] * angles[section_[i]] : base[r];
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
    auto coeff_row = [&](std::size_t r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nv);
      const int v = var[section_[idx_[r]]];
      if (v >= 0) row(v) = -K[r];
      return row;
    };
    for (std::size_t r = 0; r < n; ++r) {
      const int v = var[section_[idx_[r]]];
      if (v < 0) continue;
      // residual = y - fixed + K theta
      const double y = d.torque()[idx_[r]] - fixed[r];
      H(v, v) += K[r] * K[r];
      g(v) += K[r] * y;
    }
    const auto nl = n > 1 ? static_cast<Eigen::Index>(n - 1) : 0;
    Eigen::MatrixXd A(2 * nl, nv);
    Eigen::VectorXd b(2 * nl);
    for (Eigen::Index r = 0; r < nl; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      const double dt = d.phase()[idx_[ru + 1]] - d.phase()[idx_[ru]];
      const Eigen::RowVectorXd diff = coeff_row(ru + 1) - coeff_row(ru);
      const double cdiff = fixed[ru + 1] - fixed[ru];
      A.row(2 * r) = diff;
      b(2 * r) = prob_.lipschitz_c * dt - cdiff;
      A.row(2 * r + 1) = -diff;
      b(2 * r + 1) = prob_.lipschitz_c * dt + cdiff;
    }
    Box box{Eigen::VectorXd(nv), Eigen::VectorXd(nv)};
    for (std::size_t s = 0; s < prob_.sections(); ++s) {
      if (var[s] < 0) continue;
      box.lower(var[s]) = prob_.angle_bounds[s].lo;
      box.upper(var[s]) = prob_.angle_bounds[s].hi;
    }
    auto res = solve_qp(H, g, A, b, box);
    std::vector<double> out = angles;
    for (std::size_t s = 0; s < prob_.sections(); ++s)
      if (var[s] >= 0) out[s] = std::clamp(res.x(var[s]), prob_.angle_bounds[s].lo, prob_.angle_bounds[s].hi);
    return out;
  }

  /// Joint Levenberg-Marquardt step on (coefficients, angles): the torque
  /// model is linearized around the current point, positivity rows are kept
  /// exactly, Lipschitz rows are linearized, and angles stay inside their
  /// bounds. Returns nothing when the QP has no usable step.
  std::optional<std::pair<Eigen::VectorXd, std::vector<double>>> joint_step(const Eigen::VectorXd& coeffs,
                                                                            const std::vector<double>& angles,
                                                                            double damping) const {
    const auto& d = prob_.data;
    const auto params = make_params(coeffs, angles);
    std::vector<int> var(prob_.sections(), -1);
    int na = 0;
    for (std::size_t s = 0; s < prob_.sections(); ++s)
      if (has_samples_[s]) var[s] = nk_ + nd_ + na++;
    const int nv = nk_ + nd_ + na;
    const auto n = static_cast<Eigen::Index>(idx_.size());

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, nv);
    J.leftCols(nk_ + nd_) = design(angles);
    Eigen::VectorXd tau(n), r(n);
    for (Eigen::Index row = 0; row < n; ++row) {
      const std::size_t i = idx_[static_cast<std::size_t>(row)];
      const double t = d.phase()[i];
      const int v = var[section_[i]];
      if (v >= 0) J(row, v) = -eval_profile(params.stiffness, t);
      tau(row) = impedance_torque(params, d.angle()[i], d.velocity()[i], t);
      r(row) = d.torque()[i] - tau(row);
    }
    Eigen::VectorXd sc(nv);
    for (int j = 0; j < nv; ++j) {
      const double nrm = J.col(j).norm();
      sc(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
    }
    const Eigen::MatrixXd Js = J * sc.asDiagonal();

    const auto ng = static_cast<Eigen::Index>(grid_.size());
    const Eigen::Index nl = n > 1 ? n - 1 : 0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * ng + 2 * nl, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * ng + 2 * nl);
    for (Eigen::Index g = 0; g < ng; ++g) {
      const double t = grid_[static_cast<std::size_t>(g)];
      for (int j = 0; j < nk_; ++j) A(g, j) = -basis(j, t) * sc(j);
      for (int j = 0; j < nd_; ++j) A(ng + g, nk_ + j) = -basis(j, t) * sc(nk_ + j);
      b(g) = params.stiffness.polynomial(t);
      b(ng + g) = params.damping.polynomial(t);
    }
    for (Eigen::Index row = 0; row < nl; ++row) {
      const double dt = d.phase()[idx_[static_cast<std::size_t>(row) + 1]] - d.phase()[idx_[static_cast<std::size_t>(row)]];
      const double dtau = tau(row + 1) - tau(row);
      A.row(2 * ng + 2 * row) = Js.row(row + 1) - Js.row(row);
      b(2 * ng + 2 * row) = prob_.lipschitz_c * dt - dtau;
      A.row(2 * ng + 2 * row + 1) = -(Js.row(row + 1) - Js.row(row));
      b(2 * ng + 2 * row + 1) = prob_.lipschitz_c * dt + dtau;
    }
    Box box{Eigen::VectorXd::Constant(nv, -std::numeric_limits<double>::infinity()),
            Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity())};
    for (std::size_t s = 0; s < prob_.sections(); ++s) {
      const int v = var[s];
      if (v < 0) continue;
      box.lower(v) = (prob_.angle_bounds[s].lo - angles[s]) / sc(v);
      box.upper(v) = (prob_.angle_bounds[s].hi - angles[s]) / sc(v);
    }
    Eigen::MatrixXd H = Js.transpose() * Js;
    H.diagonal().array() += damping;
    const Eigen::VectorXd g = -Js.transpose() * r;
    QpResult res;
    try {
      res = solve_qp(H, g, A, b, box);
    } catch (const QpInfeasible&) {
      return std::nullopt;
    }
    const Eigen::VectorXd step = sc.asDiagonal() * res.x;
    Eigen::VectorXd c = coeffs + step.head(nk_ + nd_);
    std::vector<double> a = angles;
    for (std::size_t s = 0; s < prob_.sections(); ++s)
      if (var[s] >= 0) a[s] = std::clamp(a[s] + step(var[s]), prob_.angle_bounds[s].lo, prob_.angle_bounds[s].hi);
    return std::make_pair(std::move(c), std::move(a));
  }

  double cost(const ImpedanceParameters& p) const { return fit_cost(p, prob_.data, prob_.fit_window); }

  double worst_violation(const ImpedanceParameters& p) const {
    const auto report = constraint_report(p);
    double w = 0.0;
    for (const auto& c : report.checks) w = std::max(w, c.worst_violation);
    return w;
  }

  ValidationReport constraint_report(const ImpedanceParameters& p) const {
    return constraint_report(p, prob_.solver.feasibility_tol);
  }

  ValidationReport constraint_report(const ImpedanceParameters& p, double tol) const {
    auto report = validate(p, prob_.constraint_grid_n, tol);
    std::vector<double> tau, ph;
    for (std::size_t i : idx_) {
      tau.push_back(impedance_torque(p, prob_.data.angle()[i], prob_.data.velocity()[i], prob_.data.phase()[i]));
      ph.push_back(prob_.data.phase()[i]);
    }
    ConstraintCheck lip{"lipschitz"};
    if (tau.size() >= 2) {
      const double margin = lipschitz_margin(tau, ph, prob_.lipschitz_c);
      lip.worst_violation = std::max(0.0, margin);
      lip.satisfied = margin <= tol;
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k + 1 < tau.size(); ++k) {
        const double m = std::abs((tau[k + 1] - tau[k]) / (ph[k + 1] - ph[k]));
        if (m > worst) {
          worst = m;
          lip.phase = ph[k];
        }
      }
    }
    report.checks.push_back(lip);
    return report;
  }

  double data_norm() const noexcept { return data_norm_; }
  int stiffness_terms() const noexcept { return nk_; }
  int damping_terms() const noexcept { return nd_; }

 private:
  const EstimationProblem& prob_;
  std::vector<std::size_t> idx_;
  int nk_;
  int nd_;
  EquilibriumSchedule sched_;
  std::vector<std::size_t> section_;
  std::vector<bool> has_samples_;
  std::vector<double> grid_;
  double data_norm_ = 0.0;
};

inline std::vector<double> padded(const std::vector<double>& c, int terms) {
  std::vector<double> out(static_cast<std::size_t>(terms), 0.0);
  std::copy_n(c.begin(), std::min<std::size_t>(c.size(), out.size()), out.begin());
  return out;
}

}  // namespace detail

/// Alternating minimization: coefficients by inequality-constrained least
/// squares with angles fixed, then angles by a box-constrained QP with
/// coefficients fixed (Lipschitz rows kept in both). Deterministic in
/// (prob, init, seed); the seed only draws initial angles when no init is
/// given.
inline EstimationResult solve(const EstimationProblem& prob, const std::optional<ImpedanceParameters>& init = {},
                              std::uint64_t seed = 0) {
  detail::AlternatingSolver alt(prob);
  const std::size_t sections = prob.sections();
  const int nk = alt.stiffness_terms(), nd = alt.damping_terms();

  std::vector<double> angles(sections);
  std::optional<Eigen::VectorXd> coeffs;
  if (init) {
    if (init->schedule.boundaries() != prob.schedule.boundaries)
      throw DomainError("initial parameters use a different section layout");
    angles = init->schedule.angles();
    for (std::size_t s = 0; s < sections; ++s)
      angles[s] = std::clamp(angles[s], prob.angle_bounds[s].lo, prob.angle_bounds[s].hi);
    auto k = detail::padded(init->stiffness.coeffs(), nk);
    auto d = detail::padded(init->damping.coeffs(), nd);
    Eigen::VectorXd c(nk + nd);
    for (int j = 0; j < nk; ++j) c(j) = k[static_cast<std::size_t>(j)];
    for (int j = 0; j < nd; ++j) c(nk + j) = d[static_cast<std::size_t>(j)];
    coeffs = c;
  } else {
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < sections; ++s) {
      std::uniform_real_distribution<double> u(prob.angle_bounds[s].lo, prob.angle_bounds[s].hi);
      angles[s] = u(rng);
    }
  }

  EstimationResult result{alt.make_params(Eigen::VectorXd::Zero(nk + nd), angles)};
  result.seed = seed;

  // Current iterate; a candidate from a half-step replaces it only when the
  // cost does not increase, so the trace is non-increasing.
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd cur_c;
  if (coeffs) {
    auto p0 = alt.make_params(*coeffs, angles);
    if (alt.constraint_report(p0).satisfied()) {
      cur_c = *coeffs;
      best = alt.cost(p0);
    }
  }

  const double abs_floor = 1e-12 * std::max(1.0, alt.data_norm());
  double lm_damping = 1e-3;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= prob.solver.max_iters; ++it) {
    const double before = best;

    Eigen::VectorXd c = alt.solve_coefficients(angles);
    double ca = alt.cost(alt.make_params(c, angles));
    if (!std::isfinite(ca)) throw EstimationError("non-finite cost in coefficient step");
    if (ca <= best || cur_c.size() == 0) {
      cur_c = c;
      best = ca;
    }

    auto next = alt.solve_angles(cur_c, angles);
    double cb = alt.cost(alt.make_params(cur_c, next));
    if (!std::isfinite(cb)) throw EstimationError("non-finite cost in angle step");
    if (cb <= best) {
      angles = std::move(next);
      best = cb;
    }

    // Joint step; accepted only if strictly better and feasible with a
    // tenth of the reporting tolerance.
    for (int attempt = 0; attempt < 8; ++attempt) {
      auto cand = alt.joint_step(cur_c, angles, lm_damping);
      if (cand) {
        const auto cp = alt.make_params(cand->first, cand->second);
        const double cc = alt.cost(cp);
        if (std::isfinite(cc) && cc < best && alt.constraint_report(cp, 0.1 * prob.solver.feasibility_tol).satisfied()) {
          cur_c = std::move(cand->first);
          angles = std::move(cand->second);
          best = cc;
          lm_damping = std::max(lm_damping * 0.1, 1e-12);
          break;
        }
      }
      lm_damping = std::min(lm_damping * 10.0, 1e6);
    }

    const auto params = alt.make_params(cur_c, angles);
    result.solver_trace.push_back({it, best, alt.worst_violation(params)});
    if (best <= abs_floor ||
        (std::isfinite(before) && std::abs(before - best) <= prob.solver.tol_rel * std::max(before, abs_floor))) {
      converged = true;
      break;
    }
  }

  result.params = alt.make_params(cur_c, angles);
  result.cost = best;
  result.iterations = std::min(it, prob.solver.max_iters);
  result.converged = converged;
  result.constraint_report = alt.constraint_report(result.params);
  return result;
}

/// Best of n_starts seeded cold starts (start i uses seed + i). Converged
/// results win over non-converged ones; ties go to the earliest start.
inline EstimationResult multi_start(const EstimationProblem& prob, std::size_t n_starts, std::uint64_t seed = 0,
                                    bool parallel = true) {
  if (n_starts < 1) throw DomainError("multi_start needs at least one start");
  std::vector<std::optional<EstimationResult>> results(n_starts);
  std::vector<std::string> errors(n_starts);
  auto run = [&prob](std::uint64_t s) { return solve(prob, std::nullopt, s); };

  if (parallel && n_starts > 1) {
    std::vector<std::future<EstimationResult>> futures;
    for (std::size_t i = 0; i < n_starts; ++i) futures.push_back(std::async(std::launch::async, run, seed + i));
    for (std::size_t i = 0; i < n_starts; ++i) {
      try {
        results[i] = futures[i].get();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  } else {
    for (std::size_t i = 0; i < n_starts; ++i) {
      try {
        results[i] = run(seed + i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  }

  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < n_starts; ++i) {
    if (!results[i]) continue;
    if (!pick) {
      pick = i;
      continue;
    }
    const auto& a = *results[i];
    const auto& b = *results[*pick];
    if ((a.converged && !b.converged) || (a.converged == b.converged && a.cost < b.cost)) pick = i;
  }
  if (!pick) throw EstimationError("all " + std::to_string(n_starts) + " starts failed: " + errors.front());
  EstimationResult best = std::move(*results[*pick]);
  best.start_index = *pick;
  return best;
}

/// Solves the same problem for a sequence of equal stiffness/damping
/// orders. Each order is warm-started from the previous order's solution
/// (zero-padded, so it stays feasible) and also cold-started; the lower
/// cost is kept.
inline std::vector<EstimationResult> order_sweep(const EstimationProblem& base, std::span<const int> orders,
                                                 std::size_t n_starts, std::uint64_t seed = 0) {
  std::vector<EstimationResult> out;
  std::optional<ImpedanceParameters> warm;
  for (int order : orders) {
    EstimationProblem prob = base;
    prob.stiffness_order = prob.damping_order = order;
    EstimationResult best = multi_start(prob, n_starts, seed);
    if (warm && warm->stiffness.order() <= order) {
      EstimationResult w = solve(prob, warm, seed);
      if (w.cost < best.cost) best = std::move(w);
    }
    warm = best.params;
    out.push_back(std::move(best));
  }
  return out;
}

}  // namespace impedance
