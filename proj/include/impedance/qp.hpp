#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "impedance/errors.hpp"

namespace impedance {

/// Box bounds; infinite entries mean "unbounded". Empty vectors mean no box.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct QpOptions {
  double feasibility_tol = 1e-12;  // on unit-normalized rows, relative to max(1, |x|)
  double kkt_tol = 1e-8;
  int max_iterations = 0;  // 0: 10 * (rows + dim) + 100
};

struct QpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double regularization = 0.0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  std::vector<std::size_t> active;  // row indices, box rows after general rows
  Eigen::VectorXd multipliers;      // one per row, >= 0
};

namespace detail {

/// Goldfarb-Idnani dual active-set method for
///   min 1/2 x'Gx + g'x  s.t.  N'x >= c
/// with G positive definite. Columns of N are the constraint normals.
class DualActiveSet {
 public:
  DualActiveSet(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& N, const Eigen::VectorXd& c,
                const QpOptions& opt)
      : n_(static_cast<int>(g.size())), m_(static_cast<int>(c.size())), G_(G), g_(g), N_(N), c_(c), opt_(opt) {}

  bool factor() {
    Eigen::LLT<Eigen::MatrixXd> llt(G_);
    if (llt.info() != Eigen::Success) return false;
    Eigen::MatrixXd L = llt.matrixL();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n_; ++i) {
      lo = std::min(lo, L(i, i) * L(i, i));
      hi = std::max(hi, L(i, i) * L(i, i));
    }
    if (!(lo > 1e-14 * hi)) return false;
    // J = L^{-T}
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    return true;
  }

  QpResult run() {
    const int max_iter = opt_.max_iterations > 0 ? opt_.max_iterations : 10 * (m_ + n_) + 100;
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    x_ = -J_ * (J_.transpose() * g_);
    active_.clear();
    u_.clear();
    std::vector<char> in_active(static_cast<std::size_t>(m_), 0);
    int iterations = 0;

    while (true) {
      if (++iterations > max_iter) throw QpMaxIterations("QP iteration limit exceeded");
      Eigen::VectorXd s = N_.transpose() * x_ - c_;
      const double tol = opt_.feasibility_tol * std::max(1.0, x_.lpNorm<Eigen::Infinity>());
      int p = -1;
      double worst = -tol;
      for (int i = 0; i < m_; ++i) {
        if (!in_active[static_cast<std::size_t>(i)] && s(i) < worst) {
          worst = s(i);
          p = i;
        }
      }
      if (p < 0) break;

      double sp = s(p);
      double up = 0.0;
      while (true) {
        if (++iterations > max_iter) throw QpMaxIterations("QP iteration limit exceeded");
        const int q = static_cast<int>(active_.size());
        Eigen::VectorXd d = J_.transpose() * N_.col(p);
        Eigen::VectorXd z = J_.rightCols(n_ - q) * d.tail(n_ - q);
        Eigen::VectorXd r(q);
        if (q > 0) r = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

        double t1 = std::numeric_limits<double>::infinity();
        int drop = -1;
        for (int k = 0; k < q; ++k) {
          if (r(k) > 0.0 && u_[static_cast<std::size_t>(k)] / r(k) < t1) {
            t1 = u_[static_cast<std::size_t>(k)] / r(k);
            drop = k;
          }
        }
        // zn = |J2' n_p|^2; compare against |J' n_p|^2 so the test is scale free.
        const double zn = z.dot(N_.col(p));
        const bool primal_step = zn > 1e-14 * d.squaredNorm();
        const double t2 = primal_step ? -sp / zn : std::numeric_limits<double>::infinity();
        const double t = std::min(t1, t2);

        if (!std::isfinite(t)) {
          std::vector<std::size_t> cert(active_.begin(), active_.end());
          cert.push_back(static_cast<std::size_t>(p));
          std::sort(cert.begin(), cert.end());
          throw QpInfeasible("QP constraints are infeasible", std::move(cert));
        }

        for (int k = 0; k < q; ++k) u_[static_cast<std::size_t>(k)] -= t * r(k);
        up += t;
        if (!primal_step) {
          in_active[active_[static_cast<std::size_t>(drop)]] = 0;
          remove(drop);
          continue;
        }

        x_ += t * z;
        if (t == t2) {
          if (!add(d)) {
            std::vector<std::size_t> cert(active_.begin(), active_.end());
            cert.push_back(static_cast<std::size_t>(p));
            throw QpInfeasible("QP constraints are linearly dependent at the solution", std::move(cert));
          }
          active_.push_back(static_cast<std::size_t>(p));
          u_.push_back(up);
          in_active[static_cast<std::size_t>(p)] = 1;
          break;
        }
        in_active[active_[static_cast<std::size_t>(drop)]] = 0;
        remove(drop);
        sp = N_.col(p).dot(x_) - c_(p);
      }
    }

    QpResult res;
    res.x = x_;
    res.iterations = iterations;
    res.active = active_;
    res.multipliers = Eigen::VectorXd::Zero(m_);
    for (std::size_t k = 0; k < active_.size(); ++k) res.multipliers(static_cast<Eigen::Index>(active_[k])) = u_[k];
    return res;
  }

 private:
  // Appends a constraint whose transformed normal is d = J' n. Rotates J so
  // that d has zeros below position q.
  bool add(Eigen::VectorXd& d) {
    const int q = static_cast<int>(active_.size());
    for (int j = n_ - 1; j > q; --j) {
      double cc = d(j - 1), ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j - 1), b = J_(k, j);
        J_(k, j - 1) = a * cc + b * ss;
        J_(k, j) = xny * (a + J_(k, j - 1)) - b;
      }
    }
    R_.col(q).head(q + 1) = d.head(q + 1);
    const double scale = std::max(1.0, R_.topLeftCorner(q + 1, q + 1).cwiseAbs().maxCoeff());
    return std::abs(d(q)) > 1e-14 * scale;
  }

  void remove(int pos) {
    const int q = static_cast<int>(active_.size());
    active_.erase(active_.begin() + pos);
    u_.erase(u_.begin() + pos);
    for (int i = pos; i < q - 1; ++i) R_.col(i) = R_.col(i + 1);
    R_.col(q - 1).setZero();
    const int nq = q - 1;
    for (int j = pos; j < nq; ++j) {
      double cc = R_(j, j), ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < nq; ++k) {
        const double a = R_(j, k), b = R_(j + 1, k);
        R_(j, k) = a * cc + b * ss;
        R_(j + 1, k) = xny * (a + R_(j, k)) - b;
      }
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j), b = J_(k, j + 1);
        J_(k, j) = a * cc + b * ss;
        J_(k, j + 1) = xny * (J_(k, j) + a) - b;
      }
    }
  }

  int n_;
  int m_;
  const Eigen::MatrixXd& G_;
  const Eigen::VectorXd& g_;
  const Eigen::MatrixXd& N_;
  const Eigen::VectorXd& c_;
  QpOptions opt_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd x_;
  std::vector<std::size_t> active_;
  std::vector<double> u_;
};

}  // namespace detail

/// Minimizes 1/2 x'Hx + g'x subject to A x <= b and lower <= x <= upper.
///
/// H must be symmetric positive semidefinite. When it is singular or nearly
/// so, lambda I is added with lambda = 1e-10 trace(H) / dim. Rows of A are
/// normalized internally; rows below 1e-10 of the largest row norm are
/// treated as empty. Box bounds become extra rows appended after A.
/// Throws QpInfeasible with the offending row set, or QpMaxIterations.
inline QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b, const Box& box = {}, const QpOptions& opt = {}) {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n) throw DomainError("QP Hessian has wrong shape");
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n)) throw DomainError("QP constraint matrix has wrong shape");
  const bool has_box = box.lower.size() > 0 || box.upper.size() > 0;
  if (has_box && (box.lower.size() != n || box.upper.size() != n)) throw DomainError("QP box has wrong shape");

  // Rows as constraint normals N'x >= c.
  std::vector<Eigen::VectorXd> normals;
  std::vector<double> rhs;
  std::vector<std::size_t> origin;
  std::vector<double> row_scale;
  // Rows that are numerically null next to the largest row reduce to 0 <= b.
  const double max_row = A.rows() > 0 ? A.rowwise().norm().maxCoeff() : 0.0;
  const double b_scale = std::max(1.0, b.size() > 0 ? b.lpNorm<Eigen::Infinity>() : 0.0);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm <= 1e-10 * max_row) {
      if (b(i) < -1e-9 * b_scale)
        throw QpInfeasible("QP has an empty row with negative bound", {static_cast<std::size_t>(i)});
      continue;
    }
    normals.push_back(-A.row(i).transpose() / nrm);
    rhs.push_back(-b(i) / nrm);
    origin.push_back(static_cast<std::size_t>(i));
    row_scale.push_back(nrm);
  }
  if (has_box) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (box.lower(j) > box.upper(j))
        throw QpInfeasible("QP box bounds cross", {static_cast<std::size_t>(A.rows() + 2 * j)});
      if (std::isfinite(box.upper(j))) {
        normals.push_back(-Eigen::VectorXd::Unit(n, j));
        rhs.push_back(-box.upper(j));
        origin.push_back(static_cast<std::size_t>(A.rows() + 2 * j));
        row_scale.push_back(1.0);
      }
      if (std::isfinite(box.lower(j))) {
        normals.push_back(Eigen::VectorXd::Unit(n, j));
        rhs.push_back(box.lower(j));
        origin.push_back(static_cast<std::size_t>(A.rows() + 2 * j + 1));
        row_scale.push_back(1.0);
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(normals.size());
  Eigen::MatrixXd N(n, m);
  Eigen::VectorXd c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    N.col(i) = normals[static_cast<std::size_t>(i)];
    c(i) = rhs[static_cast<std::size_t>(i)];
  }

  Eigen::MatrixXd G = 0.5 * (H + H.transpose());
  double lambda = 0.0;
  QpResult res;
  {
    detail::DualActiveSet solver(G, g, N, c, opt);
    if (!solver.factor()) {
      const double tr = G.trace();
      lambda = tr > 0.0 ? 1e-10 * tr / static_cast<double>(n) : 1e-10;
      G.diagonal().array() += lambda;
      detail::DualActiveSet regularized(G, g, N, c, opt);
      if (!regularized.factor()) throw DomainError("QP Hessian is not positive semidefinite");
      res = regularized.run();
    } else {
      res = solver.run();
    }
  }

  // Map back to caller's row numbering and unnormalized multipliers.
  const std::size_t total_rows = static_cast<std::size_t>(A.rows()) + (has_box ? 2 * static_cast<std::size_t>(n) : 0);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total_rows));
  std::vector<std::size_t> active;
  for (std::size_t k : res.active) {
    active.push_back(origin[k]);
    lam(static_cast<Eigen::Index>(origin[k])) = res.multipliers(static_cast<Eigen::Index>(k)) / row_scale[k];
  }
  std::sort(active.begin(), active.end());
  res.active = std::move(active);
  res.regularization = lambda;

  // KKT stationarity of the (regularized) problem: Gx + g + A'lam_A + box terms = 0.
  Eigen::VectorXd grad = G * res.x + g;
  if (A.rows() > 0) grad += A.transpose() * lam.head(A.rows());
  if (has_box)
    for (Eigen::Index j = 0; j < n; ++j) grad(j) += lam(A.rows() + 2 * j) - lam(A.rows() + 2 * j + 1);
  res.kkt_residual = grad.lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  double viol = 0.0;
  if (A.rows() > 0) viol = std::max(viol, (A * res.x - b).maxCoeff());
  if (has_box) {
    viol = std::max(viol, (res.x - box.upper).maxCoeff());
    viol = std::max(viol, (box.lower - res.x).maxCoeff());
  }
  res.max_violation = std::max(0.0, viol);
  res.multipliers = std::move(lam);
  res.objective = 0.5 * res.x.dot(H * res.x) + g.dot(res.x);
  return res;
}

}  // namespace impedance
