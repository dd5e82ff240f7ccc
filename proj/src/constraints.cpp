#include "combresp/constraints.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "combresp/errors.hpp"

namespace combresp {

namespace {

void check_entries(const Eigen::MatrixXi& A, const char* who) {
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (A(i, j) < -1 || A(i, j) > 1)
        throw InvalidEntry(std::string(who) + ": entry " +
                           std::to_string(A(i, j)) + " at (" +
                           std::to_string(i) + "," + std::to_string(j) +
                           ") outside {-1,0,1}");
}

// Fraction-free Bareiss determinant; exact for integer matrices of the sizes
// enumerated here.
std::int64_t int_det(Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 1;
  std::int64_t sign = 1;
  std::int64_t prev = 1;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (m(k, k) == 0) {
      Eigen::Index swap = -1;
      for (Eigen::Index i = k + 1; i < n; ++i)
        if (m(i, k) != 0) {
          swap = i;
          break;
        }
      if (swap < 0) return 0;
      m.row(k).swap(m.row(swap));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

// Property check: at most one +1 and at most one -1 per column.
bool at_most_one_each_sign(const Eigen::MatrixXi& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    int pos = 0, neg = 0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (A(i, j) == 1) ++pos;
      if (A(i, j) == -1) ++neg;
    }
    if (pos > 1 || neg > 1) return false;
  }
  return true;
}

// Property check: every column has exactly 0 or 2 nonzeros and the rows admit
// a bipartition S with equal column sums on both sides. Columns force parity
// relations between their two rows (same sign -> opposite sides, mixed signs
// -> same side); existence of S is two-colorability, tested with a parity
// union-find.
bool signed_bipartition(const Eigen::MatrixXi& A) {
  const Eigen::Index m = A.rows();
  std::vector<int> parent(m), parity(m, 0);
  std::iota(parent.begin(), parent.end(), 0);
  // find with path compression, tracking parity to the root
  auto find = [&](int x, int& par) {
    par = 0;
    while (parent[x] != x) {
      par ^= parity[x];
      x = parent[x];
    }
    return x;
  };
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    int r1 = -1, r2 = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (A(i, j) == 0) continue;
      if (r1 < 0)
        r1 = static_cast<int>(i);
      else if (r2 < 0)
        r2 = static_cast<int>(i);
      else
        return false;  // more than two nonzeros
    }
    if (r1 >= 0 && r2 < 0) return false;  // single nonzero cannot balance
    if (r1 < 0) continue;
    const int want = (A(r1, j) == A(r2, j)) ? 1 : 0;
    int p1 = 0, p2 = 0;
    const int a = find(r1, p1);
    const int b = find(r2, p2);
    if (a == b) {
      if ((p1 ^ p2) != want) return false;
    } else {
      parent[a] = b;
      parity[a] = p1 ^ p2 ^ want;
    }
  }
  return true;
}

bool exhaustive_tum(const Eigen::MatrixXi& A) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  const int kmax = std::min(m, d);
  using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<int> rows(kmax), cols(kmax);
  for (int k = 2; k <= kmax; ++k) {
    // first k-combination of rows
    std::iota(rows.begin(), rows.begin() + k, 0);
    for (;;) {
      std::iota(cols.begin(), cols.begin() + k, 0);
      for (;;) {
        IMat sub(k, k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) sub(i, j) = A(rows[i], cols[j]);
        const std::int64_t det = int_det(std::move(sub));
        if (det < -1 || det > 1) return false;
        // next column combination
        int t = k - 1;
        while (t >= 0 && cols[t] == d - k + t) --t;
        if (t < 0) break;
        ++cols[t];
        for (int s = t + 1; s < k; ++s) cols[s] = cols[s - 1] + 1;
      }
      int t = k - 1;
      while (t >= 0 && rows[t] == m - k + t) --t;
      if (t < 0) break;
      ++rows[t];
      for (int s = t + 1; s < k; ++s) rows[s] = rows[s - 1] + 1;
    }
  }
  return true;
}

}  // namespace

ConstraintSystem new_constraint_system(Eigen::MatrixXi A, Eigen::VectorXi b,
                                       std::optional<std::string> label) {
  if (A.cols() < 1)
    throw DimensionMismatch("constraint system needs dimension d >= 1");
  if (A.rows() != b.size())
    throw DimensionMismatch("row count of A (" + std::to_string(A.rows()) +
                            ") does not match length of b (" +
                            std::to_string(b.size()) + ")");
  check_entries(A, "new_constraint_system");
  return ConstraintSystem{std::move(A), std::move(b), std::move(label)};
}

bool is_tum(const Eigen::MatrixXi& A, int budget) {
  check_entries(A, "is_tum");
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  if (m == 0 || d == 0) return true;
  const Eigen::MatrixXi At = A.transpose();
  if (at_most_one_each_sign(A) || at_most_one_each_sign(At)) return true;
  if (signed_bipartition(A) || signed_bipartition(At)) return true;
  if (std::min(m, d) > budget)
    throw SizeLimitExceeded("is_tum: exhaustive enumeration over budget (min(m,d) = " +
                            std::to_string(std::min(m, d)) + " > " +
                            std::to_string(budget) + ")");
  return exhaustive_tum(A);
}

ConstraintSystem build_cardinality(int d, int M) {
  if (d < 1) throw DimensionMismatch("build_cardinality: d must be >= 1");
  if (M < 0 || M > d)
    throw InvalidEntry("build_cardinality: need 0 <= M <= d");
  Eigen::MatrixXi A = Eigen::MatrixXi::Ones(1, d);
  Eigen::VectorXi b(1);
  b << M;
  return ConstraintSystem{std::move(A), std::move(b),
                          "cardinality(" + std::to_string(d) + "," +
                              std::to_string(M) + ")"};
}

ConstraintSystem build_matching(const BipartiteGraph& g) {
  if (g.left_nodes < 1 || g.right_nodes < 1 || g.edges.empty())
    throw EmptyGraph("build_matching: graph has no nodes or no edges");
  const int m = g.left_nodes + g.right_nodes;
  const int d = static_cast<int>(g.edges.size());
  Eigen::MatrixXi A = Eigen::MatrixXi::Zero(m, d);
  for (int e = 0; e < d; ++e) {
    const auto [l, r] = g.edges[e];
    if (l < 0 || l >= g.left_nodes || r < 0 || r >= g.right_nodes)
      throw IndexOutOfRange("build_matching: edge " + std::to_string(e) +
                            " references invalid node");
    if (A(l, e) != 0 || A(g.left_nodes + r, e) != 0)
      throw InvalidEntry("build_matching: malformed incidence");
    A(l, e) = 1;
    A(g.left_nodes + r, e) = 1;
  }
  for (int e = 0; e < d; ++e)
    for (int f = e + 1; f < d; ++f)
      if (g.edges[e] == g.edges[f])
        throw InvalidEntry("build_matching: duplicate edge");
  return ConstraintSystem{std::move(A), Eigen::VectorXi::Ones(m), "matching"};
}

ConstraintSystem build_partial_order(
    int d, const std::vector<std::pair<int, int>>& pairs) {
  if (d < 1) throw DimensionMismatch("build_partial_order: d must be >= 1");
  const int m = static_cast<int>(pairs.size());
  Eigen::MatrixXi A = Eigen::MatrixXi::Zero(m, d);
  for (int r = 0; r < m; ++r) {
    const auto [j, k] = pairs[r];
    if (j < 0 || j >= d || k < 0 || k >= d)
      throw IndexOutOfRange("build_partial_order: pair " + std::to_string(r) +
                            " out of range");
    if (j == k)
      throw SelfPair("build_partial_order: pair " + std::to_string(r) +
                     " relates a coordinate to itself");
    A(r, j) = 1;
    A(r, k) = -1;
  }
  return ConstraintSystem{std::move(A), Eigen::VectorXi::Zero(m),
                          "partial_order"};
}

ConstraintSystem build_equality(const Eigen::MatrixXi& A_tilde,
                                const Eigen::VectorXi& b_tilde) {
  check_entries(A_tilde, "build_equality");
  if (A_tilde.rows() != b_tilde.size())
    throw DimensionMismatch("build_equality: shape mismatch");
  const Eigen::Index m = A_tilde.rows();
  const Eigen::Index d = A_tilde.cols();
  Eigen::MatrixXi A(2 * m, d);
  A.topRows(m) = A_tilde;
  A.bottomRows(m) = -A_tilde;
  Eigen::VectorXi b(2 * m);
  b.head(m) = b_tilde;
  b.tail(m) = -b_tilde;
  return ConstraintSystem{std::move(A), std::move(b), "equality"};
}

Eigen::MatrixXi boxed_rows(const Eigen::MatrixXi& A) {
  const Eigen::Index m = A.rows();
  const Eigen::Index d = A.cols();
  Eigen::MatrixXi out(m + 2 * d, d);
  out.topRows(m) = A;
  out.middleRows(m, d) = Eigen::MatrixXi::Identity(d, d);
  out.bottomRows(d) = -Eigen::MatrixXi::Identity(d, d);
  return out;
}

bool satisfies(const ConstraintSystem& cs, const Eigen::VectorXi& y) {
  if (y.size() != cs.dim())
    throw DimensionMismatch("satisfies: response dimension mismatch");
  if (cs.rows() == 0) return true;
  return ((cs.A * y - cs.b).array() <= 0).all();
}

std::vector<Eigen::VectorXi> enumerate_feasible(const ConstraintSystem& cs) {
  const int d = cs.dim();
  if (d > 20)
    throw SizeLimitExceeded("enumerate_feasible: d = " + std::to_string(d) +
                            " exceeds the enumeration guard (20)");
  std::vector<Eigen::VectorXi> out;
  Eigen::VectorXi z(d);
  const std::uint32_t top = 1u << d;
  for (std::uint32_t code = 0; code < top; ++code) {
    for (int j = 0; j < d; ++j) z[j] = (code >> (d - 1 - j)) & 1u;
    if (satisfies(cs, z)) out.push_back(z);
  }
  return out;
}

bool verify_integral(const ConstraintSystem& cs) {
  const int d = cs.dim();
  const int m = cs.rows();
  if (d > 10 || m > 10)
    throw SizeLimitExceeded("verify_integral: guarded at d <= 10 and m <= 10");
  using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  using IVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

  const int rmax = std::min(m, d);
  std::vector<int> rowsel(rmax), colsel(rmax);
  std::vector<int> fixed_idx(d);
  // Enumerate candidate vertices: r tight rows of A, r coordinates solved for,
  // the remaining d - r coordinates fixed at a box bound. Every vertex of the
  // boxed polyhedron appears under at least one such combination.
  for (int r = 0; r <= rmax; ++r) {
    std::iota(rowsel.begin(), rowsel.begin() + r, 0);
    bool more_rows = true;
    while (more_rows) {
      std::iota(colsel.begin(), colsel.begin() + r, 0);
      bool more_cols = true;
      while (more_cols) {
        // complement of colsel
        int nfix = 0;
        {
          int c = 0;
          for (int j = 0; j < d; ++j) {
            if (c < r && colsel[c] == j)
              ++c;
            else
              fixed_idx[nfix++] = j;
          }
        }
        IMat base(r, r);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) base(i, j) = cs.A(rowsel[i], colsel[j]);
        const std::int64_t det = int_det(base);
        if (det != 0) {
          for (std::uint32_t mask = 0; mask < (1u << nfix); ++mask) {
            IVec rhs(r);
            for (int i = 0; i < r; ++i) {
              std::int64_t v = cs.b(rowsel[i]);
              for (int t = 0; t < nfix; ++t)
                if ((mask >> t) & 1u) v -= cs.A(rowsel[i], fixed_idx[t]);
              rhs[i] = v;
            }
            // Cramer solve: numerators n_j, solution z_j = n_j / det.
            IVec num(r);
            for (int j = 0; j < r; ++j) {
              IMat mj = base;
              mj.col(j) = rhs;
              num[j] = int_det(std::move(mj));
            }
            const std::int64_t den = det;
            const std::int64_t adet = den > 0 ? den : -den;
            // box feasibility of solved coordinates: 0 <= n/den <= 1
            bool feasible = true;
            for (int j = 0; j < r && feasible; ++j) {
              const std::int64_t n = den > 0 ? num[j] : -num[j];
              if (n < 0 || n > adet) feasible = false;
            }
            // remaining rows of A
            for (int k = 0; k < m && feasible; ++k) {
              std::int64_t lhs = 0;
              for (int j = 0; j < r; ++j) lhs += cs.A(k, colsel[j]) * num[j];
              std::int64_t rk = cs.b(k);
              for (int t = 0; t < nfix; ++t)
                if ((mask >> t) & 1u) rk -= cs.A(k, fixed_idx[t]);
              // lhs/den <= rk  <=>  sgn-adjusted integer comparison
              if (den > 0) {
                if (lhs > rk * den) feasible = false;
              } else {
                if (lhs < rk * den) feasible = false;
              }
            }
            if (!feasible) continue;
            for (int j = 0; j < r; ++j)
              if (num[j] % den != 0) return false;  // fractional vertex
          }
        }
        // next column subset
        int t = r - 1;
        while (t >= 0 && colsel[t] == d - r + t) --t;
        if (t < 0)
          more_cols = false;
        else {
          ++colsel[t];
          for (int s = t + 1; s < r; ++s) colsel[s] = colsel[s - 1] + 1;
        }
        if (r == 0) more_cols = false;
      }
      int t = r - 1;
      while (t >= 0 && rowsel[t] == m - r + t) --t;
      if (t < 0)
        more_rows = false;
      else {
        ++rowsel[t];
        for (int s = t + 1; s < r; ++s) rowsel[s] = rowsel[s - 1] + 1;
      }
      if (r == 0) more_rows = false;
    }
  }
  return true;
}

}  // namespace combresp
