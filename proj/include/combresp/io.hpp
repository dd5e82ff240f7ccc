#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "combresp/constraints.hpp"
#include "combresp/inference.hpp"
#include "combresp/mcmc.hpp"

namespace combresp {

// --- constraint systems ---------------------------------------------------
// JSON contract: {"d": int, "m": int, "A": [[int,...],...], "b": [int,...],
//                 "label": string|null}

std::string constraints_to_json(const ConstraintSystem& cs);
ConstraintSystem constraints_from_json(const std::string& text);
ConstraintSystem load_constraints(const std::string& path);
void save_constraints(const ConstraintSystem& cs, const std::string& path);

// --- datasets ---------------------------------------------------------------
// CSV with header y_1,...,y_d[,x_1,...,x_p]; responses strictly 0/1.

void save_dataset_csv(const Dataset& dataset, const std::string& path);

/// Loads responses/covariates and validates them against `cs`. A file
/// without x columns yields the intercept design (single row of ones).
Dataset load_dataset_csv(const std::string& path, ConstraintSystem cs);

// --- chains -----------------------------------------------------------------
// CSV header: iter,<name>,... ; metadata JSON sidecar holds
// {seed, iterations, burnin, thin, block_size, acceptance_rates, wall_seconds}
// plus model dimensions.

void save_chain(const Chain& chain, const std::string& csv_path,
                const std::string& meta_path);
Chain load_chain(const std::string& csv_path, const std::string& meta_path);

// --- generic named-column CSV ------------------------------------------------

void save_matrix_csv(const Eigen::MatrixXd& mat,
                     const std::vector<std::string>& names,
                     const std::string& path);
Eigen::MatrixXd load_matrix_csv(const std::string& path,
                                std::vector<std::string>* names = nullptr);

// --- hierarchical model spec --------------------------------------------------
// JSON: {"kappa": int, "tau_beta": real, "times": [n], "group_of": [d],
//        "num_groups": int, "w_terms": [{"name": str,
//        "values": scalar | [d]}], "v_alpha": [[M x M]]}
// Fixed terms are broadcast over time (a scalar or one value per coordinate),
// which keeps them evaluable on new time grids at prediction.

struct HierSpecFile {
  int kappa = 5;
  double tau_beta = 0.1;
  Eigen::VectorXd times;     // one per observation row
  Eigen::VectorXi group_of;  // 0-based group of each coordinate
  int num_groups = 1;
  std::vector<std::string> w_names;
  std::vector<Eigen::VectorXd> w_values;  // one d-vector per fixed term
  Eigen::MatrixXd v_alpha;
};

HierSpecFile hier_spec_from_json(const std::string& text);
std::string hier_spec_to_json(const HierSpecFile& file);
HierSpecFile load_hier_spec(const std::string& path);
void save_hier_spec(const HierSpecFile& file, const std::string& path);

/// Materializes the design matrices (B from the cubic spline basis over the
/// observed time range, C from group_of, W from the broadcast values).
HierarchicalSpec build_hier_spec(const HierSpecFile& file);

/// Mean vector mu(t) for one posterior draw (beta kappa x K, alpha M) on a
/// possibly new time point, using the training-time spline basis.
Eigen::VectorXd hier_mean_at(const HierSpecFile& file, const BSplineBasis& basis,
                             const Eigen::MatrixXd& beta,
                             const Eigen::VectorXd& alpha, double t);

// --- event queries -------------------------------------------------------------
// JSON: {"queries": [{"name": str, "event": PRED, "given": PRED|null}]} with
// PRED = {"mode": "all"|"any", "clauses": [{"indices": [ints],
//         "op": "<="|">="|"==", "target": int}]}

struct NamedQuery {
  std::string name;
  EventQuery query;
};

std::vector<NamedQuery> load_queries(const std::string& path);
std::string queries_to_json(const std::vector<NamedQuery>& queries);

}  // namespace combresp
