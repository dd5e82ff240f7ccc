#include "combresp/polytope.hpp"

#include <cmath>
#include <limits>

#include "combresp/errors.hpp"
#include "combresp/lp.hpp"

namespace combresp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Chord construction keeps this much slack so that every visited point
// passes the strict membership test.
constexpr double kChordMargin = 1e-11;
}  // namespace

Eigen::VectorXd DualPolytope::slacks(const Eigen::VectorXd& u_free) const {
  Eigen::VectorXd t = zeta;
  if (free_dim() > 0) t -= active_A.transpose() * u_free;
  return sgn.cwiseProduct(t);
}

bool DualPolytope::contains(const Eigen::VectorXd& u_full) const {
  if (u_full.size() != num_rows) return false;
  for (int k : inactive_rows)
    if (std::abs(u_full[k]) > kMembershipMargin) return false;
  Eigen::VectorXd uf(free_dim());
  for (int i = 0; i < free_dim(); ++i) {
    uf[i] = u_full[active_rows[i]];
    if (!(uf[i] > kMembershipMargin)) return false;
    if (!(uf[i] < bound_cap)) return false;
  }
  return (slacks(uf).array() > kMembershipMargin).all();
}

Eigen::VectorXd DualPolytope::to_full(const Eigen::VectorXd& u_free) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(num_rows);
  for (int i = 0; i < free_dim(); ++i) u[active_rows[i]] = u_free[i];
  return u;
}

Eigen::VectorXd DualPolytope::to_free(const Eigen::VectorXd& u_full) const {
  Eigen::VectorXd uf(free_dim());
  for (int i = 0; i < free_dim(); ++i) uf[i] = u_full[active_rows[i]];
  return uf;
}

DualPolytope build_dual_polytope(const Eigen::VectorXi& y,
                                 const Eigen::VectorXd& zeta,
                                 const ConstraintSystem& cs) {
  const int d = cs.dim();
  const int m = cs.rows();
  if (y.size() != d || zeta.size() != d)
    throw DimensionMismatch("build_dual_polytope: shape mismatch");
  DualPolytope poly;
  poly.y = y;
  poly.zeta = zeta;
  poly.num_rows = m;
  poly.sgn.resize(d);
  for (int j = 0; j < d; ++j) poly.sgn[j] = (y[j] == 1) ? 1.0 : -1.0;
  if (m > 0) {
    const Eigen::VectorXi slack = cs.A * y - cs.b;
    for (int k = 0; k < m; ++k) {
      if (slack[k] > 0)
        throw InfeasibleY("build_dual_polytope: y violates row " +
                          std::to_string(k));
      if (slack[k] == 0)
        poly.active_rows.push_back(k);
      else
        poly.inactive_rows.push_back(k);
    }
    poly.active_A.resize(poly.free_dim(), d);
    for (int i = 0; i < poly.free_dim(); ++i)
      poly.active_A.row(i) = cs.A.row(poly.active_rows[i]).cast<double>();
  } else {
    poly.active_A.resize(0, d);
  }
  return poly;
}

SlackPoint max_min_slack(const DualPolytope& poly, double slack_cap) {
  const int nf = poly.free_dim();
  const int d = static_cast<int>(poly.zeta.size());
  if (nf == 0) {
    SlackPoint sp;
    sp.u_full = Eigen::VectorXd::Zero(poly.num_rows);
    sp.slack = (poly.sgn.cwiseProduct(poly.zeta)).minCoeff();
    return sp;
  }
  // Variables (u_free, t); maximize t subject to
  //   sgn_j A'_{.j} u + t <= sgn_j zeta_j   (thresholds)
  //   -u_k + t <= 0                         (coordinate positivity)
  // with 0 <= u <= cap and t <= slack_cap.
  const int nrow = d + nf;
  Eigen::MatrixXd R(nrow, nf + 1);
  Eigen::VectorXd r(nrow);
  for (int j = 0; j < d; ++j) {
    R.row(j).head(nf) = poly.sgn[j] * poly.active_A.col(j).transpose();
    R(j, nf) = 1.0;
    r[j] = poly.sgn[j] * poly.zeta[j];
  }
  for (int i = 0; i < nf; ++i) {
    R.row(d + i).setZero();
    R(d + i, i) = -1.0;
    R(d + i, nf) = 1.0;
    r[d + i] = 0.0;
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nf + 1);
  c[nf] = 1.0;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(nf + 1);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(nf + 1, poly.bound_cap);
  const double tmin =
      -(poly.zeta.cwiseAbs().maxCoeff() + poly.bound_cap * nf + 1.0);
  lo[nf] = tmin;
  hi[nf] = slack_cap;

  const lp::Solution sol = lp::maximize(R, r, c, lo, hi);
  if (sol.status != lp::Status::Optimal)
    throw Error("max_min_slack: interior LP failed");
  SlackPoint sp;
  sp.u_full = poly.to_full(sol.x.head(nf));
  sp.slack = sol.x[nf];
  return sp;
}

std::optional<Eigen::VectorXd> find_interior_point(const DualPolytope& poly,
                                                   double margin) {
  if (poly.free_dim() == 0) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(poly.num_rows);
    if (poly.contains(zero)) return zero;
    return std::nullopt;
  }
  const SlackPoint sp = max_min_slack(poly);
  if (sp.slack < margin) return std::nullopt;
  return sp.u_full;
}

Eigen::VectorXd sample_u_rejection(const DualPolytope& poly, SeededStream& rng,
                                   long max_proposals) {
  const int nf = poly.free_dim();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(poly.num_rows);
  if (nf == 0) {
    if (!poly.contains(u))
      throw EmptyDualPolytope("sample_u_rejection: singleton is not a member");
    return u;
  }
  Eigen::VectorXd uf(nf);
  for (long attempt = 0; attempt < max_proposals; ++attempt) {
    for (int i = 0; i < nf; ++i)
      uf[i] = sample_truncated_exponential(1.0, 0.0, poly.bound_cap, rng);
    if ((poly.slacks(uf).array() > kMembershipMargin).all() &&
        (uf.array() > kMembershipMargin).all()) {
      return poly.to_full(uf);
    }
  }
  throw RejectionBudgetExhausted(
      "sample_u_rejection: no acceptance after " +
      std::to_string(max_proposals) + " proposals");
}

Eigen::VectorXd sample_u_hitrun(const DualPolytope& poly,
                                const Eigen::VectorXd& start, int steps,
                                SeededStream& rng) {
  const int nf = poly.free_dim();
  if (nf == 0) {
    if (!poly.contains(Eigen::VectorXd::Zero(poly.num_rows)))
      throw EmptyDualPolytope("sample_u_hitrun: singleton is not a member");
    return Eigen::VectorXd::Zero(poly.num_rows);
  }
  if (!poly.contains(start))
    throw NotInterior("sample_u_hitrun: start point is not a strict member");
  Eigen::VectorXd u = poly.to_free(start);
  const int d = static_cast<int>(poly.zeta.size());
  Eigen::VectorXd v(nf);
  for (int s = 0; s < steps; ++s) {
    // direction on the unit sphere of the free coordinates with positive sum
    double vsum = 0.0;
    do {
      for (int i = 0; i < nf; ++i) v[i] = rng.normal();
      const double norm = v.norm();
      if (norm < 1e-300) continue;
      v /= norm;
      vsum = v.sum();
    } while (std::abs(vsum) < 1e-12);
    if (vsum < 0.0) {
      v = -v;
      vsum = -vsum;
    }
    // chord of U (with margin) through u along v
    double a_lo = -kInf, a_hi = kInf;
    auto tighten = [&](double coef, double limit) {
      // constraint: coef * alpha <= limit
      if (coef > 1e-14) {
        a_hi = std::min(a_hi, limit / coef);
      } else if (coef < -1e-14) {
        a_lo = std::max(a_lo, limit / coef);
      }
    };
    const Eigen::VectorXd th_u = poly.active_A.transpose() * u;
    const Eigen::VectorXd th_v = poly.active_A.transpose() * v;
    for (int j = 0; j < d; ++j) {
      const double slack = poly.sgn[j] * (poly.zeta[j] - th_u[j]) - kChordMargin;
      tighten(poly.sgn[j] * th_v[j], slack);
    }
    for (int i = 0; i < nf; ++i) {
      tighten(-v[i], u[i] - kChordMargin);          // u_i + alpha v_i >= margin
      tighten(v[i], poly.bound_cap - u[i]);         // u_i + alpha v_i <= cap
    }
    if (!(a_lo < a_hi)) continue;  // numerically degenerate chord; stay put
    const double alpha = sample_truncated_exponential(vsum, a_lo, a_hi, rng);
    u += alpha * v;
  }
  return poly.to_full(u);
}

DualPolytope envelope_polytope(const Eigen::VectorXi& y,
                               const Eigen::VectorXd& zeta,
                               const Eigen::VectorXd& zeta_star,
                               const ConstraintSystem& cs) {
  const int d = cs.dim();
  if (zeta.size() != d || zeta_star.size() != d || y.size() != d)
    throw DimensionMismatch("envelope_polytope: shape mismatch");
  Eigen::VectorXd combined(d);
  for (int j = 0; j < d; ++j)
    combined[j] = (y[j] == 1) ? std::max(zeta[j], zeta_star[j])
                              : std::min(zeta[j], zeta_star[j]);
  return build_dual_polytope(y, combined, cs);
}

Eigen::VectorXd sample_u(const DualPolytope& poly, SeededStream& rng,
                         const SampleUOptions& opt,
                         const Eigen::VectorXd* warm_start) {
  const int nf = poly.free_dim();
  if (nf == 0) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(poly.num_rows);
    if (!poly.contains(zero))
      throw EmptyDualPolytope("sample_u: singleton dual set is empty");
    return zero;
  }
  if (nf <= opt.rejection_threshold) {
    try {
      return sample_u_rejection(poly, rng, opt.rejection_budget);
    } catch (const RejectionBudgetExhausted&) {
      // thin polytope; fall through to hit-and-run
    }
  }
  Eigen::VectorXd start;
  if (warm_start != nullptr && poly.contains(*warm_start)) {
    start = *warm_start;
  } else {
    auto ip = find_interior_point(poly, kMembershipMargin);
    if (!ip)
      throw EmptyDualPolytope("sample_u: no interior point found");
    start = *ip;
  }
  return sample_u_hitrun(poly, start, opt.hitrun_steps, rng);
}

}  // namespace combresp
