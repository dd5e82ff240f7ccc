#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "combresp/constraints.hpp"
#include "combresp/distributions.hpp"
#include "combresp/polytope.hpp"

namespace combresp {

/// Combinatorial responses with covariates. Y rows must satisfy A y <= b.
struct Dataset {
  Eigen::MatrixXi Y;   // n x d binary responses
  Eigen::MatrixXd X;   // p x n covariates (column per observation)
  ConstraintSystem cs;

  int n() const { return static_cast<int>(Y.rows()); }
  int d() const { return static_cast<int>(Y.cols()); }
  int p() const { return static_cast<int>(X.rows()); }
};

/// Validates shapes, binary entries and per-row feasibility.
/// Throws InvalidEntry, DimensionMismatch or InfeasibleRow (with row index).
Dataset make_dataset(Eigen::MatrixXi Y, Eigen::MatrixXd X, ConstraintSystem cs);

struct SamplerConfig {
  long iterations = 10000;
  long burnin = 1000;
  long thin = 1;
  double tau = 10.0;      // prior column scale of beta
  int block_size = 100;   // latent coordinates proposed per update
  int hitrun_steps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ChainState {
  Eigen::MatrixXd beta;      // d x p
  Eigen::MatrixXd zeta;      // n x d latent embeddings
  Eigen::MatrixXd u_cache;   // n x m, last admissible dual per observation
  long iteration = 0;
  Eigen::VectorXi accept_counts;  // per observation
  Eigen::VectorXi update_counts;
};

struct ChainMetadata {
  std::uint64_t seed = 0;
  long iterations = 0;
  long burnin = 0;
  long thin = 1;
  int block_size = 0;
  std::vector<double> acceptance_rates;
  double wall_seconds = 0.0;
  std::string model;  // "regression", "intercept" or "hierarchical"
  int d = 0, p = 0;
  int kappa = 0, num_groups = 0, num_fixed_terms = 0;  // hierarchical dims
};

/// Retained posterior draws, one named column per scalar parameter.
struct Chain {
  std::vector<std::string> names;
  Eigen::MatrixXd samples;
  ChainMetadata meta;
};

/// Latent matrix satisfying the augmentation identity T(zeta_i) = y_i for
/// every row, built from the dual certificate with unit multipliers on
/// active rows and a +-0.5 offset around the thresholds. Each row is
/// verified through the transform; failure signals a non-integral system.
Eigen::MatrixXd init_latent(const Dataset& dataset);

/// One latent update for observation i restricted to `block` (0-based
/// coordinate subset): draws the auxiliary dual, proposes one-sided
/// truncated-normal coordinates around beta x_i, and accepts via the
/// envelope-polytope membership test. The augmentation identity is
/// preserved whether or not the proposal is accepted.
void gibbs_update_zeta(ChainState& state, int i, const std::vector<int>& block,
                       const Dataset& dataset, const SamplerConfig& config,
                       SeededStream& rng);

/// Conjugate matrix-normal update of beta given the latent matrix.
void gibbs_update_beta(ChainState& state, const Dataset& dataset,
                       const SamplerConfig& config, SeededStream& rng);

/// Full Gibbs sampler for the regression model: cycles coordinate blocks
/// through the latent updates and redraws beta each iteration. Deterministic
/// for a fixed config (independent of `threads`).
Chain run_chain(const Dataset& dataset, const SamplerConfig& config);

/// Intercept-only variant: covariates replaced by a constant one, so beta
/// reduces to the d-vector of means.
Chain run_intercept_chain(const Dataset& dataset, const SamplerConfig& config);

/// Hierarchical mean structure mu = sum_m alpha_m W_m + B beta C with
/// grouped coefficient columns; C assigns each response coordinate to one
/// of K groups (one-hot columns).
struct HierarchicalSpec {
  std::vector<Eigen::MatrixXd> W;  // M fixed n x d design terms
  Eigen::MatrixXd B;               // n x kappa basis design
  Eigen::MatrixXi C;               // K x d grouping, one-hot columns
  Eigen::MatrixXd V_alpha;         // M x M prior covariance of alpha
  double tau_beta = 0.1;
};

/// Group sizes s_k = |{j : C_{k,j} = 1}|; throws GroupEmpty when some
/// group has no coordinates.
Eigen::VectorXi group_sizes(const HierarchicalSpec& spec);

/// Draw of the grouped coefficient matrix given alpha and the latent matrix:
/// columns beta_k are conditionally independent normals with mean
/// (1/s_k) sum_{j in J_k} Q_j and covariance (1/s_k)(B'B + tau_beta I)^{-1},
/// where Q = (B'B + tau_beta I)^{-1} B'(zeta - sum_m alpha_m W_m).
Eigen::MatrixXd sample_hier_beta(const HierarchicalSpec& spec,
                                 const Eigen::MatrixXd& zeta,
                                 const Eigen::VectorXd& alpha,
                                 SeededStream& rng);

/// Draw of the fixed-term coefficients given beta: normal with precision
/// Gamma + V_alpha^{-1}, Gamma_{s,t} = trace(W_s' W_t), and linear term
/// gamma_m = trace(W_m'(zeta - B beta C)).
Eigen::VectorXd sample_hier_alpha(const HierarchicalSpec& spec,
                                  const Eigen::MatrixXd& zeta,
                                  const Eigen::MatrixXd& beta,
                                  SeededStream& rng);

/// Gibbs sampler for the hierarchical model; records the flattened beta
/// (row-major) followed by alpha.
Chain run_hierarchical_chain(const HierarchicalSpec& spec,
                             const Dataset& dataset,
                             const SamplerConfig& config);

}  // namespace combresp
