#pragma once

#include <vector>

#include <Eigen/Dense>

#include "combresp/constraints.hpp"

namespace combresp {

/// Result of the linear-program transform y = argmax zeta'z over
/// [0,1]^d intersected with {A z <= b}.
struct TransformResult {
  Eigen::VectorXi y;             // binary primal optimum
  Eigen::VectorXd u;             // nonnegative duals of the A rows
  double objective = 0.0;        // zeta' y
  std::vector<int> active_rows;  // rows with (A y - b)_k = 0
};

/// Degeneracy tolerance for tie and threshold-equality detection.
inline constexpr double kDegenerateTol = 1e-9;

/// Solves the transform via a bounded-variable simplex and certifies the
/// result: y is the unique maximizer, u is an interior dual certificate
/// satisfying the strict thresholding inequalities
/// y_j = 1(zeta_j > A'_{.j} u). Callers must pass an integral system.
/// Throws DegenerateInput on ties or threshold equalities within tolerance
/// and Infeasible when the polyhedron misses the unit box.
TransformResult solve_transform(const Eigen::VectorXd& zeta,
                                const ConstraintSystem& cs);

/// Primal-only fast path used by Monte Carlo loops: same maximizer as
/// solve_transform without the dual extraction.
Eigen::VectorXi apply_transform(const Eigen::VectorXd& zeta,
                                const ConstraintSystem& cs);

/// Checks the three optimality conditions of the dual certificate:
/// complementary slackness u'(A y - b) = 0 and the weak thresholding
/// inequalities, all within `tol`.
bool dual_certificate_check(const TransformResult& result,
                            const Eigen::VectorXd& zeta,
                            const ConstraintSystem& cs, double tol = 1e-8);

/// Exhaustive argmax over the feasible binaries; test oracle, d <= 20.
Eigen::VectorXi brute_force_transform(const Eigen::VectorXd& zeta,
                                      const ConstraintSystem& cs);

/// True iff some dual vector certifies y as the maximizer at zeta
/// (closed-inequality feasibility test on u). Throws InfeasibleY when y
/// itself is infeasible.
bool preimage_contains(const Eigen::VectorXi& y, const Eigen::VectorXd& zeta,
                       const ConstraintSystem& cs);

}  // namespace combresp
