#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace pampc {

/// min 0.5 du' H du + g' du  subject to  lb <= du <= ub.
struct CondensedQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  /// Levenberg shift already added to H.
  double regularization = 0.0;

  int size() const { return static_cast<int>(g.size()); }
  double objective(const Eigen::VectorXd& du) const { return 0.5 * du.dot(H * du) + g.dot(du); }
};

enum class QpStatus : std::uint8_t { Optimal, MaxIter, Degenerate };
enum class BoundFlag : std::uint8_t { Free, Lower, Upper };

std::string_view to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd du;
  std::vector<BoundFlag> active_set;
  int iterations = 0;
  QpStatus status = QpStatus::Optimal;
};

/// Primal active-set method for box-constrained QPs with a positive definite
/// H. The Cholesky factor of the free-variable block is updated in place when
/// a bound enters or leaves the working set. Ties between equally violated
/// bounds go to the smallest index.
QpSolution solve_qp(const CondensedQp& qp, int max_iter = 500);

/// Infinity norm of the projected-gradient step at du: first-order
/// stationarity measure, zero exactly at a KKT point.
double qp_kkt_residual(const CondensedQp& qp, const Eigen::VectorXd& du);

}  // namespace pampc
