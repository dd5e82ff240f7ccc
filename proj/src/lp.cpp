#include "combresp/lp.hpp"

#include <cmath>
#include <limits>

#include "combresp/errors.hpp"

namespace combresp::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-10;

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

// Dense bounded-variable simplex working state. The tableau keeps every
// column in B^{-1}-transformed coordinates; the slack block therefore holds
// B^{-1} itself, which is what the dual extraction reads.
struct Tableau {
  int n = 0;      // structural variables
  int m = 0;      // rows
  int na = 0;     // artificials
  int ncol = 0;   // n + m + na
  Eigen::MatrixXd T;
  Eigen::VectorXd xB;     // values of basic variables, one per row
  Eigen::VectorXd drow;   // reduced costs for the active objective
  Eigen::VectorXd cwork;  // active objective
  Eigen::VectorXd lo, hi;
  std::vector<VarState> state;
  std::vector<int> basic;     // row -> variable
  std::vector<int> row_of;    // variable -> row (or -1)
  const Eigen::VectorXd* rhs = nullptr;

  double value_of(int j) const {
    if (state[j] == VarState::Basic) return xB[row_of[j]];
    return state[j] == VarState::AtLower ? lo[j] : hi[j];
  }

  bool fixed(int j) const { return lo[j] == hi[j]; }

  // xB = B^{-1}(r - N x_N); the slack block of T holds B^{-1} applied to the
  // unit vectors, so both terms are sums over stored columns.
  void recompute_xB() {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k) acc += (*rhs)[k] * T.col(n + k);
    for (int j = 0; j < ncol; ++j) {
      if (state[j] == VarState::Basic) continue;
      const double v = value_of(j);
      if (v != 0.0) acc -= v * T.col(j);
    }
    xB = acc;
  }

  void recompute_drow() {
    drow = cwork;
    for (int i = 0; i < m; ++i) {
      const double cb = cwork[basic[i]];
      if (cb != 0.0) drow -= cb * T.row(i).transpose();
    }
    for (int i = 0; i < m; ++i) drow[basic[i]] = 0.0;
  }
};

struct PivotChoice {
  int entering = -1;
  int dir = 0;         // +1 entering rises from lower, -1 falls from upper
  int leave_row = -1;  // -1 means bound flip
  bool leave_to_upper = false;
  double step = 0.0;
};

// Ratio test for a candidate entering column. Returns false when the move is
// unbounded.
bool ratio_test(const Tableau& t, int e, int dir, bool bland,
                PivotChoice* out) {
  const double tol = kPivotTol;
  double best = (t.hi[e] < kInf) ? (t.hi[e] - t.lo[e]) : kInf;
  int leave = -1;
  bool to_upper = false;
  for (int i = 0; i < t.m; ++i) {
    const double a = dir * t.T(i, e);
    if (a > tol) {
      const int bj = t.basic[i];
      const double lim = (t.xB[i] - t.lo[bj]) / a;
      if (lim < best - 1e-12 ||
          (lim < best + 1e-12 && leave >= 0 &&
           (bland ? bj < t.basic[leave]
                  : std::abs(t.T(i, e)) > std::abs(t.T(leave, e))))) {
        best = lim;
        leave = i;
        to_upper = false;
      }
    } else if (a < -tol) {
      const int bj = t.basic[i];
      if (t.hi[bj] >= kInf) continue;
      const double lim = (t.hi[bj] - t.xB[i]) / (-a);
      if (lim < best - 1e-12 ||
          (lim < best + 1e-12 && leave >= 0 &&
           (bland ? bj < t.basic[leave]
                  : std::abs(t.T(i, e)) > std::abs(t.T(leave, e))))) {
        best = lim;
        leave = i;
        to_upper = true;
      }
    }
  }
  if (best >= kInf) return false;
  out->entering = e;
  out->dir = dir;
  out->leave_row = leave;
  out->leave_to_upper = to_upper;
  out->step = std::max(best, 0.0);
  return true;
}

void apply_pivot(Tableau& t, const PivotChoice& p) {
  const int e = p.entering;
  const double step = p.step;
  const Eigen::VectorXd col = t.T.col(e);
  if (p.leave_row < 0) {
    // bound flip
    if (step != 0.0) t.xB -= (p.dir * step) * col;
    t.state[e] =
        (t.state[e] == VarState::AtLower) ? VarState::AtUpper : VarState::AtLower;
    return;
  }
  const int r = p.leave_row;
  const int lv = t.basic[r];
  const double enter_val =
      (p.dir > 0) ? t.lo[e] + step : t.hi[e] - step;
  if (step != 0.0) t.xB -= (p.dir * step) * col;
  t.xB[r] = enter_val;
  // leaving variable settles on the bound it hit
  t.state[lv] = p.leave_to_upper ? VarState::AtUpper : VarState::AtLower;
  t.row_of[lv] = -1;
  t.state[e] = VarState::Basic;
  t.row_of[e] = r;
  t.basic[r] = e;
  // eliminate column e from all other rows
  const double piv = col[r];
  t.T.row(r) /= piv;
  for (int i = 0; i < t.m; ++i) {
    if (i == r) continue;
    const double f = t.T(i, e);
    if (f != 0.0) t.T.row(i) -= f * t.T.row(r);
  }
  const double f = t.drow[e];
  if (f != 0.0) t.drow -= f * t.T.row(r).transpose();
  t.drow[e] = 0.0;
}

// Runs the simplex loop on the active objective until optimal.
Status run_phase(Tableau& t, const Options& opt, long max_iter) {
  bool bland = false;
  long stall = 0;
  const long stall_limit = 4L * (t.m + t.ncol) + 64;
  for (long it = 0; it < max_iter; ++it) {
    // entering variable
    int e = -1, dir = 0;
    double best_score = opt.tol;
    for (int j = 0; j < t.ncol; ++j) {
      if (t.state[j] == VarState::Basic || t.fixed(j)) continue;
      const double dj = t.drow[j];
      if (t.state[j] == VarState::AtLower && dj > opt.tol) {
        if (bland) {
          e = j;
          dir = +1;
          break;
        }
        if (dj > best_score) {
          best_score = dj;
          e = j;
          dir = +1;
        }
      } else if (t.state[j] == VarState::AtUpper && dj < -opt.tol) {
        if (bland) {
          e = j;
          dir = -1;
          break;
        }
        if (-dj > best_score) {
          best_score = -dj;
          e = j;
          dir = -1;
        }
      }
    }
    if (e < 0) return Status::Optimal;
    PivotChoice p;
    if (!ratio_test(t, e, dir, bland, &p)) return Status::Unbounded;
    apply_pivot(t, p);
    if (p.step <= 1e-12) {
      if (++stall > stall_limit) bland = true;
    } else {
      stall = 0;
    }
    if ((it & 0x3ff) == 0x3ff) {
      t.recompute_xB();
      t.recompute_drow();
    }
  }
  return Status::IterLimit;
}

}  // namespace

Solution maximize(const Eigen::MatrixXd& R, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& hi, const Options& opt) {
  const int m = static_cast<int>(R.rows());
  const int n = static_cast<int>(R.cols());
  if (r.size() != m || c.size() != n || lo.size() != n || hi.size() != n)
    throw DimensionMismatch("lp::maximize: inconsistent shapes");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lo[j]))
      throw InvalidInterval("lp::maximize: lower bounds must be finite");
    if (hi[j] < lo[j])
      throw InvalidInterval("lp::maximize: empty variable bound");
  }

  Tableau t;
  t.n = n;
  t.m = m;
  t.rhs = &r;

  // initial nonbasic values: finite bound of smaller magnitude
  std::vector<double> start(n);
  for (int j = 0; j < n; ++j)
    start[j] =
        (hi[j] < kInf && std::abs(hi[j]) < std::abs(lo[j])) ? hi[j] : lo[j];

  Eigen::VectorXd xb0 = r;
  for (int j = 0; j < n; ++j)
    if (start[j] != 0.0) xb0 -= start[j] * R.col(j);

  std::vector<int> art_rows;
  for (int k = 0; k < m; ++k)
    if (xb0[k] < -opt.tol) art_rows.push_back(k);
  t.na = static_cast<int>(art_rows.size());
  t.ncol = n + m + t.na;

  t.T.setZero(m, t.ncol);
  t.T.leftCols(n) = R;
  t.T.middleCols(n, m).setIdentity();
  t.lo.setZero(t.ncol);
  t.hi.setConstant(t.ncol, kInf);
  t.lo.head(n) = lo;
  t.hi.head(n) = hi;
  t.state.assign(t.ncol, VarState::AtLower);
  for (int j = 0; j < n; ++j)
    t.state[j] = (start[j] == lo[j]) ? VarState::AtLower : VarState::AtUpper;
  t.basic.assign(m, -1);
  t.row_of.assign(t.ncol, -1);
  t.xB = xb0;
  for (int k = 0; k < m; ++k) {
    t.basic[k] = n + k;
    t.state[n + k] = VarState::Basic;
    t.row_of[n + k] = k;
  }
  // rows with negative slack start from an artificial basis instead
  for (int a = 0; a < t.na; ++a) {
    const int k = art_rows[a];
    const int v = n + m + a;
    t.T.row(k) = -t.T.row(k);
    t.T(k, v) = 1.0;
    t.state[n + k] = VarState::AtLower;
    t.row_of[n + k] = -1;
    t.basic[k] = v;
    t.state[v] = VarState::Basic;
    t.row_of[v] = k;
    t.xB[k] = -xb0[k];
  }

  const long max_iter =
      opt.max_iterations > 0 ? opt.max_iterations
                             : 400L + 60L * (static_cast<long>(m) + t.ncol);

  Solution sol;
  if (t.na > 0) {
    t.cwork.setZero(t.ncol);
    for (int a = 0; a < t.na; ++a) t.cwork[n + m + a] = -1.0;
    t.recompute_drow();
    const Status st = run_phase(t, opt, max_iter);
    if (st != Status::Optimal) {
      sol.status = st;
      return sol;
    }
    double infeas = 0.0;
    for (int a = 0; a < t.na; ++a) {
      const int v = n + m + a;
      if (t.state[v] == VarState::Basic) infeas += t.xB[t.row_of[v]];
    }
    if (infeas > opt.tol * std::max(1, m)) {
      sol.status = Status::Infeasible;
      return sol;
    }
    // degenerate basic artificials: pivot out where possible, then freeze
    for (int a = 0; a < t.na; ++a) {
      const int v = n + m + a;
      if (t.state[v] != VarState::Basic) continue;
      const int row = t.row_of[v];
      int enter = -1;
      for (int j = 0; j < n + m; ++j) {
        if (t.state[j] == VarState::Basic || t.fixed(j)) continue;
        if (std::abs(t.T(row, j)) > 1e-7) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        PivotChoice p;
        p.entering = enter;
        p.dir = (t.state[enter] == VarState::AtLower) ? +1 : -1;
        p.leave_row = row;
        p.leave_to_upper = false;
        p.step = 0.0;
        apply_pivot(t, p);
      }
    }
    for (int a = 0; a < t.na; ++a) {
      const int v = n + m + a;
      t.lo[v] = t.hi[v] = 0.0;
    }
  }

  t.cwork.setZero(t.ncol);
  t.cwork.head(n) = c;
  t.recompute_drow();
  const Status st = run_phase(t, opt, max_iter);
  if (st != Status::Optimal) {
    sol.status = st;
    return sol;
  }

  t.recompute_drow();
  sol.status = Status::Optimal;
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) sol.x[j] = t.value_of(j);
  sol.dual = -t.drow.segment(n, m);
  sol.reduced_cost = t.drow.head(n);
  sol.objective = c.dot(sol.x);

  if (opt.detect_ties) {
    for (int j = 0; j < n && !sol.alternate_optimum; ++j) {
      if (t.state[j] == VarState::Basic || t.fixed(j)) continue;
      if (std::abs(t.drow[j]) > opt.tie_tol) continue;
      const int dir = (t.state[j] == VarState::AtLower) ? +1 : -1;
      PivotChoice p;
      if (!ratio_test(t, j, dir, false, &p))
        sol.alternate_optimum = true;  // tied ray
      else if (p.step > opt.tie_tol)
        sol.alternate_optimum = true;
    }
  }
  return sol;
}

}  // namespace combresp::lp
