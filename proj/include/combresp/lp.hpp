#pragma once

#include <vector>

#include <Eigen/Dense>

namespace combresp::lp {

/// Engine-wide absolute tolerance for feasibility, optimality and duality
/// decisions. Problem data here is O(1) (unit-variance draws, {-1,0,1}
/// coefficients), so a single absolute tolerance is adequate.
inline constexpr double kTol = 1e-9;

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

struct Solution {
  Status status = Status::IterLimit;
  Eigen::VectorXd x;             // structural variables
  Eigen::VectorXd dual;          // one multiplier per row (>= 0 on binding rows)
  Eigen::VectorXd reduced_cost;  // structural reduced costs at the final basis
  double objective = 0.0;
  /// Set when tie detection is requested and a nonbasic structural variable
  /// with zero reduced cost admits a positive step: the maximizer is not
  /// unique.
  bool alternate_optimum = false;
};

struct Options {
  double tol = kTol;
  int max_iterations = 0;  // 0: derive from problem size
  bool detect_ties = false;
  double tie_tol = kTol;
};

/// Maximizes c'x subject to R x <= r and lo <= x <= hi.
/// Lower bounds must be finite; upper bounds may be +infinity.
/// Dense two-phase bounded-variable primal simplex (Dantzig pricing with a
/// switch to Bland's rule on stalling).
Solution maximize(const Eigen::MatrixXd& R, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& hi, const Options& opt = {});

}  // namespace combresp::lp
