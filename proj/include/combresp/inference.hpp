#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "combresp/constraints.hpp"
#include "combresp/distributions.hpp"
#include "combresp/mcmc.hpp"

namespace combresp {

/// Distribution over the feasible outcomes with pointwise credible bands
/// taken across retained posterior draws.
struct OutcomeLaw {
  std::vector<Eigen::VectorXi> outcomes;  // feasible, lexicographic order
  Eigen::VectorXd prob_mean;
  Eigen::VectorXd prob_lo;   // 2.5% quantile across draws
  Eigen::VectorXd prob_hi;   // 97.5% quantile across draws
};

/// Monte Carlo outcome frequencies at a fixed mean: draws zeta ~ N(mu, I),
/// maps through the transform and tallies against `outcomes` (pass the
/// feasible set from enumerate_feasible).
Eigen::VectorXd mc_outcome_law(const Eigen::VectorXd& mu,
                               const ConstraintSystem& cs, long draws,
                               SeededStream& rng,
                               const std::vector<Eigen::VectorXi>& outcomes);

/// Posterior predictive outcome law at covariate x_new: for every retained
/// beta draw, Monte Carlo through the transform; outcome probabilities are
/// averaged and banded across draws. Guarded at d <= 20.
OutcomeLaw predict_outcome_law(const Chain& chain, const Eigen::VectorXd& x_new,
                               const ConstraintSystem& cs, long mc_draws,
                               SeededStream& rng);

/// Declarative predicate over binary outcomes: each clause compares a
/// coordinate sum against a target; clauses combine as a conjunction
/// (require_all) or disjunction.
struct EventPredicate {
  enum class Op { LE, GE, EQ };
  struct Clause {
    std::vector<int> indices;
    Op op = Op::EQ;
    int target = 0;
  };
  std::vector<Clause> clauses;
  bool require_all = true;

  bool evaluate(const Eigen::VectorXi& y) const;
  void check_dims(int d) const;  // throws IndexOutOfRange
};

struct EventQuery {
  EventPredicate event;
  std::optional<EventPredicate> given;  // optional conditioning predicate
};

struct EventEstimate {
  double prob_mean = 0.0;
  double prob_lo = 0.0;
  double prob_hi = 0.0;
  Eigen::VectorXd per_sample;
};

/// Monte Carlo event probability with per-posterior-draw means supplied by
/// `mu_of_sample`; conditioning is a ratio of tallies with a minimum count
/// guard (throws ConditioningTooRare below 100 hits).
EventEstimate event_probability_core(
    int num_samples, const std::function<Eigen::VectorXd(int)>& mu_of_sample,
    const ConstraintSystem& cs, const EventQuery& query, long mc_draws,
    SeededStream& rng);

/// Convenience wrapper for regression/intercept chains at covariate x_new.
EventEstimate event_probability(const Chain& chain, const Eigen::VectorXd& x_new,
                                const ConstraintSystem& cs,
                                const EventQuery& query, long mc_draws,
                                SeededStream& rng);

/// Per-coordinate empirical success rates q_j = n_j1 / n and the implied
/// independent product law over all of {0,1}^d (materialized for d <= 20),
/// including outcomes that the constraints forbid.
struct UnconstrainedProbitFit {
  Eigen::VectorXd qhat;
  std::vector<Eigen::VectorXi> outcomes;
  Eigen::VectorXd probs;
};
UnconstrainedProbitFit fit_unconstrained_probit(const Dataset& dataset);

/// Cubic B-spline basis on clamped uniform knots spanning [t_min, t_max].
struct BSplineBasis {
  double t_min = 0.0;
  double t_max = 1.0;
  int num_basis = 4;
  Eigen::VectorXd knots;

  /// Basis values at t (clamped to the knot range); rows sum to one.
  Eigen::RowVectorXd eval(double t) const;
};
BSplineBasis make_bspline_basis(double t_min, double t_max, int num_basis);

/// Basis evaluated at the given points; num_basis >= 4 and at least two
/// distinct points required (InsufficientPoints otherwise).
Eigen::MatrixXd bspline_design(const Eigen::VectorXd& time_points,
                               int num_basis);

/// Sample autocorrelation with biased normalization; acf(0) = 1.
/// Throws SeriesTooShort or ZeroVariance.
Eigen::VectorXd acf(const Eigen::VectorXd& series, int max_lag);

/// Root mean squared entrywise difference.
double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};
std::vector<ParamSummary> posterior_summary(const Chain& chain);

/// Model under comparison: constraint system, prior scale, and the subset of
/// covariate rows it uses (empty = all rows of the dataset design).
struct ModelSpec {
  ConstraintSystem cs;
  double tau = 10.0;
  std::vector<int> covariate_rows;
};

struct LogMarginal {
  double log_ml = 0.0;
  double se_log = 0.0;   // delta-method standard error of log_ml
  double rel_se = 0.0;   // relative standard error on the natural scale
};

/// Prior-predictive Monte Carlo estimate of the log marginal likelihood:
/// averages prod_i P(y_i | beta) over prior draws of beta, with each
/// per-observation probability estimated by an independent transform
/// Monte Carlo of `lik_draws` samples. Intended for small models; throws
/// EstimateUnstable when the relative standard error exceeds 50%.
LogMarginal log_marginal_likelihood(const ModelSpec& model,
                                    const Dataset& dataset, int prior_draws,
                                    int lik_draws, SeededStream& rng);

}  // namespace combresp
