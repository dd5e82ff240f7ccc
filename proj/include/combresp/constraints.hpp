#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace combresp {

/// Affine constraint system (A, b) defining the polyhedron {z : A z <= b}.
/// Entries of A are restricted to {-1, 0, 1}; b is integer. The unit box
/// 0 <= z <= 1 is implicit and never stored as rows.
struct ConstraintSystem {
  Eigen::MatrixXi A;  // m x d
  Eigen::VectorXi b;  // m
  std::optional<std::string> label;

  int rows() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

/// Bipartite graph; edge order fixes the ordering of the LP variables.
struct BipartiteGraph {
  int left_nodes = 0;
  int right_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // (left index, right index)
};

/// Validates entries/shapes and returns the system.
/// Throws InvalidEntry or DimensionMismatch.
ConstraintSystem new_constraint_system(Eigen::MatrixXi A, Eigen::VectorXi b,
                                       std::optional<std::string> label = {});

/// Exact total-unimodularity test: every square submatrix has determinant in
/// {-1, 0, 1}. Fast structural sufficient conditions are tried first (at most
/// one +1 and one -1 per column/row; signed bipartition of two-nonzero
/// columns); exhaustive integer-determinant enumeration is the fallback.
/// Throws SizeLimitExceeded when min(m, d) exceeds `budget`.
bool is_tum(const Eigen::MatrixXi& A, int budget = 12);

/// One row of ones with right-hand side M: at most M active coordinates.
ConstraintSystem build_cardinality(int d, int M);

/// Node-edge incidence system of a bipartite graph with b = 1: a matching.
ConstraintSystem build_matching(const BipartiteGraph& g);

/// One row z_j - z_k <= 0 per ordered pair (j, k); indices are 0-based.
ConstraintSystem build_partial_order(int d,
                                     const std::vector<std::pair<int, int>>& pairs);

/// Equality constraints A~ z = b~ encoded as the stacked system
/// [A~; -A~] z <= [b~; -b~].
ConstraintSystem build_equality(const Eigen::MatrixXi& A_tilde,
                                const Eigen::VectorXi& b_tilde);

/// The system's rows stacked with the box rows [A; I; -I] (used when a test
/// needs the box constraints to appear explicitly).
Eigen::MatrixXi boxed_rows(const Eigen::MatrixXi& A);

/// Exact membership test A y <= b (integer arithmetic), y binary.
bool satisfies(const ConstraintSystem& cs, const Eigen::VectorXi& y);

/// All binary vectors satisfying A z <= b, in lexicographic order with the
/// first coordinate most significant. Guarded at d <= 20.
std::vector<Eigen::VectorXi> enumerate_feasible(const ConstraintSystem& cs);

/// True iff every vertex of {z in [0,1]^d : A z <= b} is integral, decided by
/// exact rational enumeration of basic solutions of the boxed system.
/// Guarded at d <= 10, m <= 10.
bool verify_integral(const ConstraintSystem& cs);

}  // namespace combresp
