#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pampc/qp.hpp"

namespace pampc {

struct SuiteResult {
  std::string name;
  /// Library operation under test, so a failure names what broke.
  std::string operation;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  int cases = 0;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  int jacobian_cases = 500;
  int projection_cases = 500;
  int qp_cases = 200;
  /// Test hook: perturb the analytic A matrix before comparison.
  bool corrupt_jacobian = false;
};

SuiteResult verify_jacobians(const VerifyOptions& opt);
SuiteResult verify_projection_velocity(const VerifyOptions& opt);
SuiteResult verify_projection_forms(const VerifyOptions& opt);
SuiteResult verify_qp(const VerifyOptions& opt);

std::vector<SuiteResult> run_verify(const VerifyOptions& opt = {});

/// Random strictly convex box QP with n variables: H = Q' D Q with
/// eigenvalues in [0.1, 10], bounds straddling zero with a few pinned.
CondensedQp random_box_qp(int n, std::mt19937_64& rng);

/// Projected gradient descent with step 1/L, stopped when the iterate
/// moves less than `tol` in the infinity norm.
Eigen::VectorXd projected_gradient_qp(const CondensedQp& qp, double tol = 1e-10, int max_iter = 2000000);

}  // namespace pampc
