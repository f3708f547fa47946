#include "pampc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace pampc {
namespace {

// Cholesky factor L L' of H restricted to an ordered list of free indices.
class FreeSetCholesky {
 public:
  explicit FreeSetCholesky(const Eigen::MatrixXd& H) : H_(H), L_(Eigen::MatrixXd::Zero(H.rows(), H.rows())) {
    order_.reserve(H.rows());
  }

  int size() const { return static_cast<int>(order_.size()); }
  const std::vector<int>& order() const { return order_; }

  // Returns false if the extended block is not positive definite.
  bool append(int index) {
    const int n = size();
    Eigen::VectorXd h(n);
    for (int k = 0; k < n; ++k) h[k] = H_(order_[k], index);
    Eigen::VectorXd l = h;
    if (n > 0) L_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(l);
    const double d2 = H_(index, index) - l.squaredNorm();
    if (!(d2 > kPivotFloor * std::max(1.0, std::abs(H_(index, index))))) return false;
    L_.block(n, 0, 1, n) = l.transpose();
    L_(n, n) = std::sqrt(d2);
    order_.push_back(index);
    return true;
  }

  void remove(int index) {
    const auto it = std::find(order_.begin(), order_.end(), index);
    const int p = static_cast<int>(it - order_.begin());
    const int n = size();
    // Drop row p, then restore lower-triangular form with Givens rotations
    // acting on column pairs (j, j+1).
    for (int r = p; r < n - 1; ++r) L_.row(r).head(n) = L_.row(r + 1).head(n);
    L_.row(n - 1).setZero();
    for (int j = p; j < n - 1; ++j) {
      const double a = L_(j, j);
      const double b = L_(j, j + 1);
      const double rho = std::hypot(a, b);
      const double c = a / rho;
      const double s = b / rho;
      for (int r = j; r < n - 1; ++r) {
        const double x = L_(r, j);
        const double y = L_(r, j + 1);
        L_(r, j) = c * x + s * y;
        L_(r, j + 1) = -s * x + c * y;
      }
    }
    L_.col(n - 1).setZero();
    order_.erase(it);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    const int n = size();
    Eigen::VectorXd x = b;
    const auto L = L_.topLeftCorner(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(x);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

 private:
  static constexpr double kPivotFloor = 1e-14;
  const Eigen::MatrixXd& H_;
  Eigen::MatrixXd L_;
  std::vector<int> order_;
};

}  // namespace

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal:
      return "Optimal";
    case QpStatus::MaxIter:
      return "MaxIter";
    case QpStatus::Degenerate:
      return "Degenerate";
  }
  return "Unknown";
}

double qp_kkt_residual(const CondensedQp& qp, const Eigen::VectorXd& du) {
  const Eigen::VectorXd grad = qp.H * du + qp.g;
  const Eigen::VectorXd projected = (du - grad).cwiseMax(qp.lb).cwiseMin(qp.ub);
  return qp.size() == 0 ? 0.0 : (projected - du).cwiseAbs().maxCoeff();
}

QpSolution solve_qp(const CondensedQp& qp, int max_iter) {
  const int n = qp.size();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lb.size() != n || qp.ub.size() != n) {
    throw std::invalid_argument("solve_qp: dimension mismatch");
  }
  if ((qp.lb.array() > qp.ub.array()).any()) throw std::invalid_argument("solve_qp: lb > ub");

  QpSolution sol;
  sol.du = Eigen::VectorXd::Zero(n).cwiseMax(qp.lb).cwiseMin(qp.ub);
  sol.active_set.assign(n, BoundFlag::Free);

  FreeSetCholesky chol(qp.H);
  for (int i = 0; i < n; ++i) {
    if (qp.lb[i] == qp.ub[i]) {
      sol.active_set[i] = BoundFlag::Lower;
    } else if (!chol.append(i)) {
      sol.status = QpStatus::Degenerate;
      return sol;
    }
  }

  const double scale = 1.0 + qp.g.cwiseAbs().maxCoeff() + qp.H.cwiseAbs().maxCoeff();
  const double multiplier_tol = 1e-13 * scale;
  Eigen::VectorXd& x = sol.du;

  // After a full unblocked step x minimizes over the current face, so the
  // next iteration goes straight to the multiplier check.
  bool on_face_minimum = false;
  while (sol.iterations < max_iter) {
    ++sol.iterations;
    const Eigen::VectorXd grad = qp.H * x + qp.g;
    const auto& free = chol.order();
    const int nf = chol.size();

    Eigen::VectorXd step;
    if (!on_face_minimum && nf > 0) {
      Eigen::VectorXd rhs(nf);
      for (int k = 0; k < nf; ++k) rhs[k] = -grad[free[k]];
      step = chol.solve(rhs);
      double step_norm = 0.0;
      double x_norm = 0.0;
      for (int k = 0; k < nf; ++k) {
        step_norm = std::max(step_norm, std::abs(step[k]));
        x_norm = std::max(x_norm, std::abs(x[free[k]]));
      }
      if (step_norm <= 1e-15 * (1.0 + x_norm)) on_face_minimum = true;
    } else {
      on_face_minimum = true;
    }

    if (on_face_minimum) {
      int release = -1;
      double worst = multiplier_tol;
      for (int i = 0; i < n; ++i) {
        if (qp.lb[i] == qp.ub[i]) continue;
        double violation = 0.0;
        if (sol.active_set[i] == BoundFlag::Lower) violation = -grad[i];
        if (sol.active_set[i] == BoundFlag::Upper) violation = grad[i];
        if (violation > worst) {
          worst = violation;
          release = i;
        }
      }
      if (release < 0) {
        sol.status = QpStatus::Optimal;
        return sol;
      }
      sol.active_set[release] = BoundFlag::Free;
      if (!chol.append(release)) {
        sol.status = QpStatus::Degenerate;
        return sol;
      }
      on_face_minimum = false;
      continue;
    }

    // Longest feasible fraction of the step; ties keep the smallest index.
    double alpha = 1.0;
    int blocking = -1;
    BoundFlag blocking_side = BoundFlag::Free;
    for (int k = 0; k < nf; ++k) {
      const int i = free[k];
      double a = std::numeric_limits<double>::infinity();
      BoundFlag side = BoundFlag::Free;
      if (step[k] < 0.0) {
        a = (qp.lb[i] - x[i]) / step[k];
        side = BoundFlag::Lower;
      } else if (step[k] > 0.0) {
        a = (qp.ub[i] - x[i]) / step[k];
        side = BoundFlag::Upper;
      }
      a = std::max(a, 0.0);
      if (a < alpha || (a == alpha && blocking >= 0 && i < blocking)) {
        alpha = a;
        blocking = i;
        blocking_side = side;
      }
    }

    for (int k = 0; k < nf; ++k) x[free[k]] += alpha * step[k];
    if (blocking >= 0) {
      x[blocking] = blocking_side == BoundFlag::Lower ? qp.lb[blocking] : qp.ub[blocking];
      sol.active_set[blocking] = blocking_side;
      chol.remove(blocking);
    } else {
      on_face_minimum = true;
    }
    x = x.cwiseMax(qp.lb).cwiseMin(qp.ub);
  }

  sol.status = QpStatus::MaxIter;
  return sol;
}

}  // namespace pampc
