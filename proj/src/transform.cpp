#include "combresp/transform.hpp"

#include <cmath>
#include <limits>

#include "combresp/errors.hpp"
#include "combresp/lp.hpp"
#include "combresp/polytope.hpp"

namespace combresp {

namespace {

// Runs the simplex and returns the rounded binary maximizer; flags ties.
Eigen::VectorXi primal_solve(const Eigen::VectorXd& zeta,
                             const ConstraintSystem& cs, bool detect_ties) {
  const int d = cs.dim();
  if (zeta.size() != d)
    throw DimensionMismatch("solve_transform: zeta dimension mismatch");

  if (cs.rows() == 0) {
    Eigen::VectorXi y(d);
    for (int j = 0; j < d; ++j) {
      if (detect_ties && std::abs(zeta[j]) <= kDegenerateTol)
        throw DegenerateInput("transform: coordinate " + std::to_string(j) +
                              " ties at the zero threshold");
      y[j] = zeta[j] > 0.0 ? 1 : 0;
    }
    return y;
  }

  lp::Options opt;
  opt.detect_ties = detect_ties;
  opt.tie_tol = kDegenerateTol;
  const lp::Solution sol =
      lp::maximize(cs.A.cast<double>(), cs.b.cast<double>(), zeta,
                   Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), opt);
  if (sol.status == lp::Status::Infeasible)
    throw Infeasible("transform: polyhedron has no point in the unit box");
  if (sol.status != lp::Status::Optimal)
    throw Error("transform: simplex did not converge");
  if (sol.alternate_optimum)
    throw DegenerateInput("transform: maximizer is not unique within tolerance");

  Eigen::VectorXi y(d);
  for (int j = 0; j < d; ++j) {
    const double v = sol.x[j];
    const long r = std::lround(v);
    if (std::abs(v - static_cast<double>(r)) > 1e-6)
      throw DegenerateInput(
          "transform: fractional optimum (system not integral?)");
    y[j] = static_cast<int>(r);
  }
  if (!satisfies(cs, y))
    throw Error("transform: rounded optimum violates constraints");
  return y;
}

}  // namespace

Eigen::VectorXi apply_transform(const Eigen::VectorXd& zeta,
                                const ConstraintSystem& cs) {
  return primal_solve(zeta, cs, /*detect_ties=*/false);
}

TransformResult solve_transform(const Eigen::VectorXd& zeta,
                                const ConstraintSystem& cs) {
  TransformResult res;
  res.y = primal_solve(zeta, cs, /*detect_ties=*/true);
  res.objective = zeta.dot(res.y.cast<double>());

  const DualPolytope poly = build_dual_polytope(res.y, zeta, cs);
  res.active_rows = poly.active_rows;
  if (poly.free_dim() == 0) {
    res.u = Eigen::VectorXd::Zero(cs.rows());
    double min_gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cs.dim(); ++j)
      min_gap = std::min(min_gap, poly.sgn[j] * zeta[j]);
    if (min_gap <= kDegenerateTol)
      throw DegenerateInput("transform: threshold equality within tolerance");
    return res;
  }
  const SlackPoint sp = max_min_slack(poly);
  if (sp.slack <= kDegenerateTol)
    throw DegenerateInput(
        "transform: dual polytope has no interior within tolerance");
  res.u = sp.u_full;
  return res;
}

bool dual_certificate_check(const TransformResult& result,
                            const Eigen::VectorXd& zeta,
                            const ConstraintSystem& cs, double tol) {
  const int d = cs.dim();
  const int m = cs.rows();
  if (result.y.size() != d || zeta.size() != d || result.u.size() != m)
    throw DimensionMismatch("dual_certificate_check: shape mismatch");
  if ((result.u.array() < -tol).any()) return false;
  if (m > 0) {
    const Eigen::VectorXd gap = (cs.A * result.y - cs.b).cast<double>();
    if (std::abs(result.u.dot(gap)) > tol) return false;
  }
  for (int j = 0; j < d; ++j) {
    double cut = 0.0;
    for (int k = 0; k < m; ++k) cut += cs.A(k, j) * result.u[k];
    if (result.y[j] == 1 && zeta[j] < cut - tol) return false;
    if (result.y[j] == 0 && zeta[j] > cut + tol) return false;
  }
  return true;
}

Eigen::VectorXi brute_force_transform(const Eigen::VectorXd& zeta,
                                      const ConstraintSystem& cs) {
  if (zeta.size() != cs.dim())
    throw DimensionMismatch("brute_force_transform: zeta dimension mismatch");
  const auto feasible = enumerate_feasible(cs);
  if (feasible.empty())
    throw Infeasible("brute_force_transform: no feasible binary point");
  const Eigen::VectorXi* best = nullptr;
  double best_val = -std::numeric_limits<double>::infinity();
  for (const auto& z : feasible) {
    const double v = zeta.dot(z.cast<double>());
    if (v > best_val) {
      best_val = v;
      best = &z;
    }
  }
  return *best;
}

bool preimage_contains(const Eigen::VectorXi& y, const Eigen::VectorXd& zeta,
                       const ConstraintSystem& cs) {
  if (!satisfies(cs, y))
    throw InfeasibleY("preimage_contains: y violates the constraints");
  const DualPolytope poly = build_dual_polytope(y, zeta, cs);
  if (poly.free_dim() == 0) {
    // closed system at u = 0: sign agreement with weak inequalities
    return (poly.sgn.cwiseProduct(zeta).array() >= -lp::kTol).all();
  }
  const SlackPoint sp = max_min_slack(poly);
  return sp.slack >= -lp::kTol;
}

}  // namespace combresp
