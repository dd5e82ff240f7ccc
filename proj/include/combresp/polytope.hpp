#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "combresp/constraints.hpp"
#include "combresp/distributions.hpp"

namespace combresp {

/// Strict membership margin for the open dual polytope under floats.
inline constexpr double kMembershipMargin = 1e-12;

/// Target slack for interior points returned to callers.
inline constexpr double kInteriorMargin = 1e-6;

/// The set U(y, zeta) of dual vectors compatible with the pair (y, zeta):
///   u_k = 0            on rows with (A y - b)_k < 0,
///   u_k > 0            on rows with (A y - b)_k = 0,
///   sgn_j (zeta_j - A'_{.j} u) > 0   for every coordinate j,
/// with sgn_j = +1 when y_j = 1 and -1 when y_j = 0. Coordinates are capped
/// at `bound_cap` during sampling so that the exponential kernel is proper
/// on unbounded sets.
struct DualPolytope {
  Eigen::VectorXi y;
  Eigen::VectorXd zeta;
  std::vector<int> active_rows;    // K+, rows with (A y - b)_k = 0
  std::vector<int> inactive_rows;  // K0, rows with (A y - b)_k < 0
  Eigen::MatrixXd active_A;        // |K+| x d slice of A
  Eigen::VectorXd sgn;             // d entries in {-1, +1}
  double bound_cap = 1e5;
  int num_rows = 0;  // m

  int free_dim() const { return static_cast<int>(active_rows.size()); }

  /// Coordinate slacks sgn_j (zeta_j - A'_{.j} u) for a free-coordinate u.
  Eigen::VectorXd slacks(const Eigen::VectorXd& u_free) const;

  /// Strict membership of a full m-vector (margin kMembershipMargin).
  bool contains(const Eigen::VectorXd& u_full) const;

  Eigen::VectorXd to_full(const Eigen::VectorXd& u_free) const;
  Eigen::VectorXd to_free(const Eigen::VectorXd& u_full) const;
};

/// Builds U(y, zeta); the active/inactive split uses exact integer
/// arithmetic on A y - b. Throws InfeasibleY when y violates A y <= b.
DualPolytope build_dual_polytope(const Eigen::VectorXi& y,
                                 const Eigen::VectorXd& zeta,
                                 const ConstraintSystem& cs);

/// Max-min-slack point of the polytope: maximizes the smallest slack
/// (threshold slacks and coordinate positivity slacks u_k alike, capped at
/// `slack_cap`). A nonnegative optimum certifies feasibility of the closed
/// inequality system; a strictly positive one yields an interior point of
/// the open set.
struct SlackPoint {
  Eigen::VectorXd u_full;
  double slack = 0.0;
};
SlackPoint max_min_slack(const DualPolytope& poly, double slack_cap = 1.0);

/// A point strictly inside U with slack at least `margin`, or nullopt.
/// The singleton case (no active rows) returns the zero vector when it is a
/// member. Defaults to the documented interior margin; callers that must
/// survive thin polytopes may pass a smaller one.
std::optional<Eigen::VectorXd> find_interior_point(
    const DualPolytope& poly, double margin = kInteriorMargin);

/// Exact draw from the density prop. to prod_{k in K+} exp(-u_k) restricted
/// to U: free coordinates are proposed as unit-rate exponentials capped at
/// bound_cap until membership holds. Throws RejectionBudgetExhausted after
/// `max_proposals` failures.
Eigen::VectorXd sample_u_rejection(const DualPolytope& poly, SeededStream& rng,
                                   long max_proposals = 1000000);

/// Hit-and-run sampler targeting the same exponential kernel: random
/// direction on the unit sphere of the free coordinates with positive
/// coordinate sum, chord intersection with U and the bound_cap box, and a
/// truncated-shifted-exponential draw along the chord. `start` must be a
/// strict member.
Eigen::VectorXd sample_u_hitrun(const DualPolytope& poly,
                                const Eigen::VectorXd& start, int steps,
                                SeededStream& rng);

/// The envelope polytope U(y, zeta~) with zeta~_j the coordinatewise
/// max (y_j = 1) or min (y_j = 0) of the two latent vectors; a superset of
/// both U(y, zeta) and U(y, zeta_star).
DualPolytope envelope_polytope(const Eigen::VectorXi& y,
                               const Eigen::VectorXd& zeta,
                               const Eigen::VectorXd& zeta_star,
                               const ConstraintSystem& cs);

struct SampleUOptions {
  int rejection_threshold = 3;   // use rejection when free_dim <= this
  long rejection_budget = 1000000;
  int hitrun_steps = 100;
};

/// Dispatcher used by the samplers: rejection in low dimension, hit-and-run
/// otherwise (or as fallback when the rejection budget is exhausted).
/// `warm_start` seeds the walk when it is a strict member; otherwise an
/// interior point is computed. Throws EmptyDualPolytope when no interior
/// point exists.
Eigen::VectorXd sample_u(const DualPolytope& poly, SeededStream& rng,
                         const SampleUOptions& opt = {},
                         const Eigen::VectorXd* warm_start = nullptr);

}  // namespace combresp
