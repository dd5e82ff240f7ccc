#include "combresp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "combresp/errors.hpp"
#include "combresp/transform.hpp"

namespace combresp {

namespace {

std::uint32_t bits_key(const Eigen::VectorXi& y) {
  std::uint32_t k = 0;
  for (int j = 0; j < y.size(); ++j) k = (k << 1) | static_cast<std::uint32_t>(y[j]);
  return k;
}

double quantile_type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

Eigen::MatrixXd beta_from_row(const Chain& chain, long s, int d, int p) {
  Eigen::MatrixXd beta(d, p);
  long c = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < p; ++j) beta(i, j) = chain.samples(s, c++);
  return beta;
}

}  // namespace

Eigen::VectorXd mc_outcome_law(const Eigen::VectorXd& mu,
                               const ConstraintSystem& cs, long draws,
                               SeededStream& rng,
                               const std::vector<Eigen::VectorXi>& outcomes) {
  const int d = cs.dim();
  if (mu.size() != d) throw DimensionMismatch("mc_outcome_law: mean dimension");
  std::unordered_map<std::uint32_t, int> index;
  index.reserve(outcomes.size() * 2);
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    index.emplace(bits_key(outcomes[i]), static_cast<int>(i));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(outcomes.size());
  Eigen::VectorXd zeta(d);
  for (long t = 0; t < draws; ++t) {
    for (int j = 0; j < d; ++j) zeta[j] = mu[j] + rng.normal();
    const Eigen::VectorXi y = apply_transform(zeta, cs);
    const auto it = index.find(bits_key(y));
    if (it == index.end())
      throw Error("mc_outcome_law: transform produced an unlisted outcome");
    counts[it->second] += 1.0;
  }
  return counts / static_cast<double>(draws);
}

OutcomeLaw predict_outcome_law(const Chain& chain, const Eigen::VectorXd& x_new,
                               const ConstraintSystem& cs, long mc_draws,
                               SeededStream& rng) {
  const int d = cs.dim();
  if (d > 20)
    throw SizeLimitExceeded("predict_outcome_law: full-law enumeration is "
                            "guarded at d <= 20; use event_probability");
  const int p = static_cast<int>(x_new.size());
  if (chain.samples.cols() != static_cast<long>(d) * p)
    throw DimensionMismatch("predict_outcome_law: chain has " +
                            std::to_string(chain.samples.cols()) +
                            " parameters, expected d*p = " +
                            std::to_string(static_cast<long>(d) * p));
  const long S = chain.samples.rows();
  if (S == 0) throw EmptyChain("predict_outcome_law: empty chain");

  OutcomeLaw law;
  law.outcomes = enumerate_feasible(cs);
  const int K = static_cast<int>(law.outcomes.size());
  Eigen::MatrixXd per_sample(S, K);
  for (long s = 0; s < S; ++s) {
    const Eigen::MatrixXd beta = beta_from_row(chain, s, d, p);
    SeededStream sub = rng.child(static_cast<std::uint64_t>(s));
    per_sample.row(s) =
        mc_outcome_law(beta * x_new, cs, mc_draws, sub, law.outcomes)
            .transpose();
  }
  law.prob_mean = per_sample.colwise().mean();
  law.prob_lo.resize(K);
  law.prob_hi.resize(K);
  for (int k = 0; k < K; ++k) {
    std::vector<double> col(per_sample.col(k).data(),
                            per_sample.col(k).data() + S);
    law.prob_lo[k] = quantile_type7(col, 0.025);
    law.prob_hi[k] = quantile_type7(col, 0.975);
  }
  return law;
}

bool EventPredicate::evaluate(const Eigen::VectorXi& y) const {
  for (const Clause& cl : clauses) {
    int sum = 0;
    for (int idx : cl.indices) sum += y[idx];
    bool ok = false;
    switch (cl.op) {
      case Op::LE: ok = sum <= cl.target; break;
      case Op::GE: ok = sum >= cl.target; break;
      case Op::EQ: ok = sum == cl.target; break;
    }
    if (require_all && !ok) return false;
    if (!require_all && ok) return true;
  }
  return require_all;
}

void EventPredicate::check_dims(int d) const {
  for (const Clause& cl : clauses)
    for (int idx : cl.indices)
      if (idx < 0 || idx >= d)
        throw IndexOutOfRange("event predicate references coordinate " +
                              std::to_string(idx) + " outside 0.." +
                              std::to_string(d - 1));
}

EventEstimate event_probability_core(
    int num_samples, const std::function<Eigen::VectorXd(int)>& mu_of_sample,
    const ConstraintSystem& cs, const EventQuery& query, long mc_draws,
    SeededStream& rng) {
  const int d = cs.dim();
  query.event.check_dims(d);
  if (query.given) query.given->check_dims(d);
  if (num_samples < 1) throw EmptyChain("event_probability: no samples");

  EventEstimate est;
  est.per_sample.resize(num_samples);
  Eigen::VectorXd zeta(d);
  for (int s = 0; s < num_samples; ++s) {
    const Eigen::VectorXd mu = mu_of_sample(s);
    SeededStream sub = rng.child(static_cast<std::uint64_t>(s));
    long cond = 0, joint = 0;
    for (long t = 0; t < mc_draws; ++t) {
      for (int j = 0; j < d; ++j) zeta[j] = mu[j] + sub.normal();
      const Eigen::VectorXi y = apply_transform(zeta, cs);
      const bool in_cond = !query.given || query.given->evaluate(y);
      if (!in_cond) continue;
      ++cond;
      if (query.event.evaluate(y)) ++joint;
    }
    if (query.given && cond < 100)
      throw ConditioningTooRare(
          "event_probability: only " + std::to_string(cond) +
          " conditioning hits at draw " + std::to_string(s) +
          "; increase mc_draws");
    est.per_sample[s] =
        cond > 0 ? static_cast<double>(joint) / static_cast<double>(cond) : 0.0;
  }
  est.prob_mean = est.per_sample.mean();
  std::vector<double> v(est.per_sample.data(),
                        est.per_sample.data() + num_samples);
  est.prob_lo = quantile_type7(v, 0.025);
  est.prob_hi = quantile_type7(v, 0.975);
  return est;
}

EventEstimate event_probability(const Chain& chain, const Eigen::VectorXd& x_new,
                                const ConstraintSystem& cs,
                                const EventQuery& query, long mc_draws,
                                SeededStream& rng) {
  const int d = cs.dim();
  const int p = static_cast<int>(x_new.size());
  if (chain.samples.cols() != static_cast<long>(d) * p)
    throw DimensionMismatch("event_probability: chain/covariate shape mismatch");
  const long S = chain.samples.rows();
  return event_probability_core(
      static_cast<int>(S),
      [&](int s) {
        return Eigen::VectorXd(beta_from_row(chain, s, d, p) * x_new);
      },
      cs, query, mc_draws, rng);
}

UnconstrainedProbitFit fit_unconstrained_probit(const Dataset& dataset) {
  const int n = dataset.n();
  const int d = dataset.d();
  if (n < 1) throw EmptyChain("fit_unconstrained_probit: empty dataset");
  UnconstrainedProbitFit fit;
  fit.qhat = dataset.Y.cast<double>().colwise().mean();
  if (d <= 20) {
    fit.outcomes.reserve(1u << d);
    Eigen::VectorXi y(d);
    fit.probs.resize(1u << d);
    for (std::uint32_t code = 0; code < (1u << d); ++code) {
      double prob = 1.0;
      for (int j = 0; j < d; ++j) {
        y[j] = (code >> (d - 1 - j)) & 1u;
        prob *= y[j] == 1 ? fit.qhat[j] : 1.0 - fit.qhat[j];
      }
      fit.outcomes.push_back(y);
      fit.probs[code] = prob;
    }
  }
  return fit;
}

BSplineBasis make_bspline_basis(double t_min, double t_max, int num_basis) {
  constexpr int kDegree = 3;
  if (num_basis < kDegree + 1)
    throw InsufficientPoints("bspline: need at least degree+1 = 4 basis functions");
  if (!(t_min < t_max))
    throw InsufficientPoints("bspline: need at least two distinct time points");
  BSplineBasis basis;
  basis.t_min = t_min;
  basis.t_max = t_max;
  basis.num_basis = num_basis;
  const int order = kDegree + 1;
  const int interior = num_basis - order;  // >= 0
  basis.knots.resize(num_basis + order);
  for (int i = 0; i < order; ++i) basis.knots[i] = t_min;
  for (int i = 0; i < interior; ++i)
    basis.knots[order + i] =
        t_min + (t_max - t_min) * static_cast<double>(i + 1) /
                    static_cast<double>(interior + 1);
  for (int i = 0; i < order; ++i) basis.knots[num_basis + i] = t_max;
  return basis;
}

Eigen::RowVectorXd BSplineBasis::eval(double t) const {
  constexpr int kDegree = 3;
  const int order = kDegree + 1;
  double x = std::min(std::max(t, t_min), t_max);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(num_basis);
  // knot span containing x (right-closed at the end of the range)
  int span = num_basis - 1;
  if (x < t_max) {
    span = order - 1;
    while (span + 1 < num_basis && x >= knots[span + 1]) ++span;
  }
  // Cox-de Boor triangle for the nonzero basis functions on this span.
  Eigen::VectorXd vals(order), left(order), right(order);
  vals[0] = 1.0;
  for (int j = 1; j < order; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double den = right[r + 1] + left[j - r];
      const double tmp = den != 0.0 ? vals[r] / den : 0.0;
      vals[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[j] = saved;
  }
  for (int r = 0; r < order; ++r) {
    const int idx = span - kDegree + r;
    if (idx >= 0 && idx < num_basis) out[idx] = vals[r];
  }
  return out;
}

Eigen::MatrixXd bspline_design(const Eigen::VectorXd& time_points,
                               int num_basis) {
  if (time_points.size() < 2)
    throw InsufficientPoints("bspline_design: need at least two time points");
  const double t_min = time_points.minCoeff();
  const double t_max = time_points.maxCoeff();
  const BSplineBasis basis = make_bspline_basis(t_min, t_max, num_basis);
  Eigen::MatrixXd design(time_points.size(), num_basis);
  for (Eigen::Index i = 0; i < time_points.size(); ++i)
    design.row(i) = basis.eval(time_points[i]);
  return design;
}

Eigen::VectorXd acf(const Eigen::VectorXd& series, int max_lag) {
  const long n = series.size();
  if (max_lag < 1 || n <= max_lag)
    throw SeriesTooShort("acf: series length must exceed max_lag");
  const double mean = series.mean();
  const Eigen::VectorXd centered = series.array() - mean;
  const double denom = centered.squaredNorm();
  if (denom <= 1e-300)
    throw ZeroVariance("acf: series has zero variance");
  Eigen::VectorXd out(max_lag + 1);
  out[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k)
    out[k] = centered.head(n - k).dot(centered.tail(n - k)) / denom;
  return out;
}

double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw ShapeMismatch("rmse: shape mismatch");
  return std::sqrt((estimate - truth).squaredNorm() /
                   static_cast<double>(estimate.size()));
}

std::vector<ParamSummary> posterior_summary(const Chain& chain) {
  const long S = chain.samples.rows();
  if (S == 0) throw EmptyChain("posterior_summary: empty chain");
  std::vector<ParamSummary> out;
  out.reserve(chain.names.size());
  for (long c = 0; c < chain.samples.cols(); ++c) {
    ParamSummary ps;
    ps.name = chain.names[c];
    ps.mean = chain.samples.col(c).mean();
    ps.sd = S > 1 ? std::sqrt((chain.samples.col(c).array() - ps.mean)
                                  .square()
                                  .sum() /
                              static_cast<double>(S - 1))
                  : 0.0;
    std::vector<double> v(chain.samples.col(c).data(),
                          chain.samples.col(c).data() + S);
    ps.q025 = quantile_type7(v, 0.025);
    ps.q50 = quantile_type7(v, 0.5);
    ps.q975 = quantile_type7(v, 0.975);
    out.push_back(std::move(ps));
  }
  return out;
}

LogMarginal log_marginal_likelihood(const ModelSpec& model,
                                    const Dataset& dataset, int prior_draws,
                                    int lik_draws, SeededStream& rng) {
  if (prior_draws < 2)
    throw EstimateUnstable("log_marginal_likelihood: need at least 2 draws");
  const int n = dataset.n();
  const int d = dataset.d();
  Eigen::MatrixXd X;
  if (model.covariate_rows.empty()) {
    X = dataset.X;
  } else {
    X.resize(model.covariate_rows.size(), n);
    for (std::size_t r = 0; r < model.covariate_rows.size(); ++r) {
      const int src = model.covariate_rows[r];
      if (src < 0 || src >= dataset.p())
        throw IndexOutOfRange("log_marginal_likelihood: covariate row " +
                              std::to_string(src));
      X.row(r) = dataset.X.row(src);
    }
  }
  const int p = static_cast<int>(X.rows());
  const double sd = std::sqrt(model.tau);

  Eigen::VectorXd logw(prior_draws);
  Eigen::VectorXd zeta(d);
  for (int s = 0; s < prior_draws; ++s) {
    SeededStream draw_stream = rng.child(static_cast<std::uint64_t>(s));
    Eigen::MatrixXd beta(d, p);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < p; ++j) beta(i, j) = sd * draw_stream.normal();
    double lw = 0.0;
    for (int i = 0; i < n && std::isfinite(lw); ++i) {
      const Eigen::VectorXd mu = beta * X.col(i);
      const Eigen::VectorXi yi = dataset.Y.row(i).transpose();
      long hits = 0;
      for (int l = 0; l < lik_draws; ++l) {
        for (int j = 0; j < d; ++j) zeta[j] = mu[j] + draw_stream.normal();
        if (apply_transform(zeta, model.cs) == yi) ++hits;
      }
      lw += hits > 0 ? std::log(static_cast<double>(hits) /
                                static_cast<double>(lik_draws))
                     : -std::numeric_limits<double>::infinity();
    }
    logw[s] = lw;
  }

  const double a = logw.maxCoeff();
  if (!std::isfinite(a))
    throw EstimateUnstable(
        "log_marginal_likelihood: every prior draw has zero likelihood");
  const Eigen::ArrayXd w = (logw.array() - a).exp();
  const double m = w.mean();
  const double var =
      (w - m).square().sum() / static_cast<double>(prior_draws - 1);
  const double se_mean = std::sqrt(var / prior_draws);
  LogMarginal out;
  out.log_ml = a + std::log(m);
  out.rel_se = se_mean / m;
  out.se_log = out.rel_se;  // delta method: sd(log m) ~ sd(m)/m
  if (out.rel_se > 0.5)
    throw EstimateUnstable("log_marginal_likelihood: relative SE " +
                           std::to_string(out.rel_se) + " exceeds 50%");
  return out;
}

}  // namespace combresp
