#include "combresp/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

#include "combresp/errors.hpp"
#include "combresp/transform.hpp"

namespace combresp {

namespace {

constexpr std::uint64_t kBetaStreamId = 1ull << 48;
constexpr std::uint64_t kAlphaStreamId = (1ull << 48) + 1;

void check_config(const SamplerConfig& cfg) {
  if (cfg.iterations < 1 || cfg.burnin < 0 || cfg.burnin >= cfg.iterations)
    throw Error("sampler config: need 0 <= burnin < iterations");
  if (cfg.thin < 1) throw Error("sampler config: thin must be >= 1");
  if (cfg.block_size < 1) throw Error("sampler config: block_size must be >= 1");
  if (!(cfg.tau > 0.0)) throw Error("sampler config: tau must be > 0");
}

std::vector<std::vector<int>> round_robin_blocks(int d, int block_size) {
  const int bs = std::min(d, block_size);
  const int nb = (d + bs - 1) / bs;
  std::vector<std::vector<int>> blocks(nb);
  for (int j = 0; j < d; ++j) blocks[j / bs].push_back(j);
  return blocks;
}

// Runs fn(i) over 0..n-1, optionally on several threads. Observation
// updates are independent given beta and carry their own streams, so the
// result does not depend on the schedule.
template <typename F>
void parallel_for(int n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int nt = std::min(threads, n);
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr err;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += nt) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Shared latent update used by both the regression and hierarchical
// samplers. zeta/ucache are the observation's rows; returns acceptance.
bool zeta_step(const Eigen::VectorXi& y, const Eigen::VectorXd& mu,
               Eigen::VectorXd& zeta, Eigen::VectorXd& ucache,
               const std::vector<int>& block, const ConstraintSystem& cs,
               const SamplerConfig& cfg, SeededStream& rng) {
  SampleUOptions opt;
  opt.hitrun_steps = cfg.hitrun_steps;

  const DualPolytope current = build_dual_polytope(y, zeta, cs);
  const bool warm_ok = ucache.size() == cs.rows();
  const Eigen::VectorXd u =
      sample_u(current, rng, opt, warm_ok ? &ucache : nullptr);

  // thresholds A'_{.j} u for the proposed coordinates
  Eigen::VectorXd zeta_star = zeta;
  for (int j : block) {
    double cut = 0.0;
    for (int k : current.active_rows) cut += cs.A(k, j) * u[k];
    zeta_star[j] = sample_truncated_normal(
        mu[j], y[j] == 1 ? Tail::Above : Tail::Below, cut, rng);
  }

  const DualPolytope envelope = envelope_polytope(y, zeta, zeta_star, cs);
  const Eigen::VectorXd u_star = sample_u(envelope, rng, opt, &u);

  const bool accepted = current.contains(u_star);
  if (accepted) zeta = zeta_star;
  // u lies in U(y, zeta*) by construction of the proposal and in
  // U(y, zeta) by the draw, so it stays admissible either way.
  ucache = u;
  return accepted;
}

struct BetaCache {
  Eigen::LLT<Eigen::MatrixXd> llt;  // of X X' + I_p / tau
};

BetaCache make_beta_cache(const Dataset& ds, const SamplerConfig& cfg) {
  const int p = ds.p();
  Eigen::MatrixXd S = ds.X * ds.X.transpose();
  S += Eigen::MatrixXd::Identity(p, p) / cfg.tau;
  BetaCache cache{Eigen::LLT<Eigen::MatrixXd>(S)};
  if (cache.llt.info() != Eigen::Success)
    throw NotPositiveDefinite("beta update: X X' + I/tau is not SPD");
  return cache;
}

void beta_draw(ChainState& state, const Dataset& ds, SeededStream& rng,
               const BetaCache& cache) {
  const int d = ds.d();
  const int p = ds.p();
  const Eigen::MatrixXd mean =
      cache.llt.solve(ds.X * state.zeta).transpose();  // d x p
  Eigen::MatrixXd z(p, d);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
  // noise' = L^{-T} z so rows of beta have covariance (X X' + I/tau)^{-1}
  const Eigen::MatrixXd noise =
      cache.llt.matrixU().solve(z).transpose();  // d x p
  state.beta = mean + noise;
}

void append_flat_row(Eigen::MatrixXd& samples, long row,
                     const Eigen::MatrixXd& mat) {
  long c = 0;
  for (long i = 0; i < mat.rows(); ++i)
    for (long j = 0; j < mat.cols(); ++j) samples(row, c++) = mat(i, j);
}

std::vector<std::string> matrix_names(const std::string& prefix, int rows,
                                      int cols) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(rows) * cols);
  for (int i = 1; i <= rows; ++i)
    for (int j = 1; j <= cols; ++j)
      names.push_back(prefix + "_" + std::to_string(i) + "_" +
                      std::to_string(j));
  return names;
}

// Acceptance-collapse guard: halves the block size when a monitoring window
// sees almost no accepted moves; goes beyond the fixed subvector rule and is
// logged when it triggers.
struct BlockAdapter {
  int current;
  long window_accept = 0;
  long window_total = 0;

  explicit BlockAdapter(int bs) : current(bs) {}

  bool observe(long accepted, long total) {
    window_accept += accepted;
    window_total += total;
    if (window_total < 200) return false;
    const double rate =
        static_cast<double>(window_accept) / static_cast<double>(window_total);
    window_accept = window_total = 0;
    if (rate < 0.02 && current > 1) {
      current = std::max(1, current / 2);
      std::cerr << "[combresp] acceptance collapsed (" << rate
                << "); halving block size to " << current << "\n";
      return true;
    }
    return false;
  }
};

Eigen::MatrixXd initial_duals(const Dataset& ds) {
  const int n = ds.n();
  const int m = ds.cs.rows();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, m);
  if (m == 0) return u;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXi slack = ds.cs.A * ds.Y.row(i).transpose() - ds.cs.b;
    for (int k = 0; k < m; ++k)
      if (slack[k] == 0) u(i, k) = 1.0;
  }
  return u;
}

}  // namespace

Dataset make_dataset(Eigen::MatrixXi Y, Eigen::MatrixXd X,
                     ConstraintSystem cs) {
  const int n = static_cast<int>(Y.rows());
  const int d = static_cast<int>(Y.cols());
  if (d != cs.dim())
    throw DimensionMismatch("make_dataset: response dimension " +
                            std::to_string(d) + " does not match system d = " +
                            std::to_string(cs.dim()));
  if (X.cols() != n)
    throw DimensionMismatch("make_dataset: X must have one column per row of Y");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      if (Y(i, j) != 0 && Y(i, j) != 1)
        throw InvalidEntry("make_dataset: response entries must be 0/1");
  for (int i = 0; i < n; ++i)
    if (!satisfies(cs, Y.row(i).transpose()))
      throw InfeasibleRow("make_dataset: row " + std::to_string(i) +
                          " violates the constraints");
  return Dataset{std::move(Y), std::move(X), std::move(cs)};
}

Eigen::MatrixXd init_latent(const Dataset& dataset) {
  const int n = dataset.n();
  const int d = dataset.d();
  const int m = dataset.cs.rows();
  const double delta = 0.5;
  Eigen::MatrixXd zeta(n, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXi y = dataset.Y.row(i).transpose();
    Eigen::VectorXd cut = Eigen::VectorXd::Zero(d);
    if (m > 0) {
      const Eigen::VectorXi slack = dataset.cs.A * y - dataset.cs.b;
      for (int k = 0; k < m; ++k)
        if (slack[k] == 0) cut += dataset.cs.A.row(k).cast<double>();
    }
    for (int j = 0; j < d; ++j)
      zeta(i, j) = cut[j] + (y[j] == 1 ? delta : -delta);
    const Eigen::VectorXi mapped =
        apply_transform(zeta.row(i).transpose(), dataset.cs);
    if (mapped != y)
      throw InitFailed("init_latent: transform round-trip failed at row " +
                       std::to_string(i) + " (is the system integral?)");
  }
  return zeta;
}

void gibbs_update_zeta(ChainState& state, int i, const std::vector<int>& block,
                       const Dataset& dataset, const SamplerConfig& config,
                       SeededStream& rng) {
  const Eigen::VectorXi y = dataset.Y.row(i).transpose();
  const Eigen::VectorXd mu = state.beta * dataset.X.col(i);
  Eigen::VectorXd zeta = state.zeta.row(i).transpose();
  Eigen::VectorXd ucache = state.u_cache.row(i).transpose();
  bool accepted;
  try {
    accepted = zeta_step(y, mu, zeta, ucache, block, dataset.cs, config, rng);
  } catch (const EmptyDualPolytope& e) {
    throw EmptyDualPolytope("observation " + std::to_string(i) + ": " +
                            e.what());
  }
  state.zeta.row(i) = zeta.transpose();
  state.u_cache.row(i) = ucache.transpose();
  state.accept_counts[i] += accepted ? 1 : 0;
  state.update_counts[i] += 1;
}

void gibbs_update_beta(ChainState& state, const Dataset& dataset,
                       const SamplerConfig& config, SeededStream& rng) {
  const BetaCache cache = make_beta_cache(dataset, config);
  beta_draw(state, dataset, rng, cache);
}

namespace {

Chain run_regression(const Dataset& ds, const SamplerConfig& cfg,
                     const std::string& model) {
  check_config(cfg);
  const int n = ds.n();
  const int d = ds.d();
  const int p = ds.p();
  const auto t0 = std::chrono::steady_clock::now();

  ChainState state;
  state.beta = Eigen::MatrixXd::Zero(d, p);
  state.zeta = init_latent(ds);
  state.u_cache = initial_duals(ds);
  state.accept_counts = Eigen::VectorXi::Zero(n);
  state.update_counts = Eigen::VectorXi::Zero(n);

  const BetaCache cache = make_beta_cache(ds, cfg);
  std::vector<SeededStream> obs_streams;
  obs_streams.reserve(n);
  for (int i = 0; i < n; ++i) obs_streams.emplace_back(cfg.seed, i);
  SeededStream beta_stream(cfg.seed, kBetaStreamId);

  BlockAdapter adapter(std::min(d, cfg.block_size));
  auto blocks = round_robin_blocks(d, adapter.current);

  const long retained = (cfg.iterations - cfg.burnin) / cfg.thin;
  Chain chain;
  chain.names = matrix_names("beta", d, p);
  chain.samples.resize(retained, static_cast<long>(d) * p);

  long row = 0;
  long last_accept = 0, last_total = 0;
  for (long t = 1; t <= cfg.iterations; ++t) {
    const auto& block = blocks[(t - 1) % blocks.size()];
    parallel_for(n, cfg.threads, [&](int i) {
      gibbs_update_zeta(state, i, block, ds, cfg, obs_streams[i]);
    });
    beta_draw(state, ds, beta_stream, cache);
    state.iteration = t;
    const long acc = state.accept_counts.cast<long>().sum();
    const long tot = state.update_counts.cast<long>().sum();
    if (adapter.observe(acc - last_accept, tot - last_total))
      blocks = round_robin_blocks(d, adapter.current);
    last_accept = acc;
    last_total = tot;
    if (t > cfg.burnin && (t - cfg.burnin) % cfg.thin == 0 && row < retained)
      append_flat_row(chain.samples, row++, state.beta);
  }

  chain.meta.seed = cfg.seed;
  chain.meta.iterations = cfg.iterations;
  chain.meta.burnin = cfg.burnin;
  chain.meta.thin = cfg.thin;
  chain.meta.block_size = std::min(d, cfg.block_size);
  chain.meta.model = model;
  chain.meta.d = d;
  chain.meta.p = p;
  chain.meta.acceptance_rates.resize(n);
  for (int i = 0; i < n; ++i)
    chain.meta.acceptance_rates[i] =
        state.update_counts[i] > 0
            ? static_cast<double>(state.accept_counts[i]) / state.update_counts[i]
            : 0.0;
  chain.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return chain;
}

}  // namespace

Chain run_chain(const Dataset& dataset, const SamplerConfig& config) {
  return run_regression(dataset, config, "regression");
}

Chain run_intercept_chain(const Dataset& dataset, const SamplerConfig& config) {
  Dataset ds = dataset;
  ds.X = Eigen::MatrixXd::Ones(1, dataset.n());
  return run_regression(ds, config, "intercept");
}

Eigen::VectorXi group_sizes(const HierarchicalSpec& spec) {
  const int K = static_cast<int>(spec.C.rows());
  const int d = static_cast<int>(spec.C.cols());
  Eigen::VectorXi s = Eigen::VectorXi::Zero(K);
  for (int j = 0; j < d; ++j) {
    int hits = 0;
    for (int k = 0; k < K; ++k) {
      if (spec.C(k, j) == 1) {
        ++hits;
        ++s[k];
      } else if (spec.C(k, j) != 0) {
        throw InvalidEntry("hierarchical spec: C entries must be 0/1");
      }
    }
    if (hits != 1)
      throw InvalidEntry("hierarchical spec: column " + std::to_string(j) +
                         " of C must be one-hot");
  }
  for (int k = 0; k < K; ++k)
    if (s[k] == 0)
      throw GroupEmpty("hierarchical spec: group " + std::to_string(k) +
                       " has no coordinates");
  return s;
}

namespace {

struct HierCache {
  Eigen::VectorXi s;
  Eigen::LLT<Eigen::MatrixXd> llt_B;      // of B'B + tau_beta I
  Eigen::LLT<Eigen::MatrixXd> llt_alpha;  // of Gamma + V_alpha^{-1}
};

HierCache make_hier_cache(const HierarchicalSpec& spec) {
  HierCache cache;
  cache.s = group_sizes(spec);
  const int kappa = static_cast<int>(spec.B.cols());
  Eigen::MatrixXd SB = spec.B.transpose() * spec.B;
  SB += spec.tau_beta * Eigen::MatrixXd::Identity(kappa, kappa);
  cache.llt_B.compute(SB);
  if (cache.llt_B.info() != Eigen::Success)
    throw NotPositiveDefinite("hierarchical: B'B + tau_beta I is not SPD");
  const int M = static_cast<int>(spec.W.size());
  if (M > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt_v(spec.V_alpha);
    if (llt_v.info() != Eigen::Success)
      throw NotPositiveDefinite("hierarchical: V_alpha is not SPD");
    Eigen::MatrixXd P =
        llt_v.solve(Eigen::MatrixXd::Identity(M, M));  // V_alpha^{-1}
    for (int s = 0; s < M; ++s)
      for (int t = 0; t < M; ++t)
        P(s, t) += spec.W[s].cwiseProduct(spec.W[t]).sum();
    cache.llt_alpha.compute(P);
    if (cache.llt_alpha.info() != Eigen::Success)
      throw NotPositiveDefinite("hierarchical: Gamma + V_alpha^{-1} is not SPD");
  }
  return cache;
}

Eigen::MatrixXd hier_beta_draw(const HierarchicalSpec& spec,
                               const HierCache& cache,
                               const Eigen::MatrixXd& zeta,
                               const Eigen::VectorXd& alpha,
                               SeededStream& rng) {
  const int kappa = static_cast<int>(spec.B.cols());
  const int K = static_cast<int>(spec.C.rows());
  Eigen::MatrixXd resid = zeta;
  for (std::size_t m = 0; m < spec.W.size(); ++m) resid -= alpha[m] * spec.W[m];
  const Eigen::MatrixXd Q = cache.llt_B.solve(spec.B.transpose() * resid);
  Eigen::MatrixXd beta(kappa, K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kappa);
    for (int j = 0; j < spec.C.cols(); ++j)
      if (spec.C(k, j) == 1) mean += Q.col(j);
    mean /= static_cast<double>(cache.s[k]);
    Eigen::VectorXd z(kappa);
    for (int r = 0; r < kappa; ++r) z[r] = rng.normal();
    beta.col(k) =
        mean + cache.llt_B.matrixU().solve(z) / std::sqrt(double(cache.s[k]));
  }
  return beta;
}

Eigen::VectorXd hier_alpha_draw(const HierarchicalSpec& spec,
                                const HierCache& cache,
                                const Eigen::MatrixXd& zeta,
                                const Eigen::MatrixXd& beta,
                                SeededStream& rng) {
  const int M = static_cast<int>(spec.W.size());
  const Eigen::MatrixXd resid =
      zeta - spec.B * beta * spec.C.cast<double>();
  Eigen::VectorXd gamma(M);
  for (int m = 0; m < M; ++m)
    gamma[m] = spec.W[m].cwiseProduct(resid).sum();
  Eigen::VectorXd z(M);
  for (int m = 0; m < M; ++m) z[m] = rng.normal();
  return cache.llt_alpha.solve(gamma) + cache.llt_alpha.matrixU().solve(z);
}

void check_hier_spec(const HierarchicalSpec& spec, const Dataset& ds) {
  const int n = ds.n();
  const int d = ds.d();
  if (spec.B.rows() != n)
    throw DimensionMismatch("hierarchical spec: B must have n rows");
  if (spec.C.cols() != d)
    throw DimensionMismatch("hierarchical spec: C must have d columns");
  for (const auto& w : spec.W)
    if (w.rows() != n || w.cols() != d)
      throw DimensionMismatch("hierarchical spec: each W term must be n x d");
  const int M = static_cast<int>(spec.W.size());
  if (spec.V_alpha.rows() != M || spec.V_alpha.cols() != M)
    throw DimensionMismatch("hierarchical spec: V_alpha must be M x M");
  if (!(spec.tau_beta > 0.0))
    throw Error("hierarchical spec: tau_beta must be > 0");
}

}  // namespace

Eigen::MatrixXd sample_hier_beta(const HierarchicalSpec& spec,
                                 const Eigen::MatrixXd& zeta,
                                 const Eigen::VectorXd& alpha,
                                 SeededStream& rng) {
  const HierCache cache = make_hier_cache(spec);
  return hier_beta_draw(spec, cache, zeta, alpha, rng);
}

Eigen::VectorXd sample_hier_alpha(const HierarchicalSpec& spec,
                                  const Eigen::MatrixXd& zeta,
                                  const Eigen::MatrixXd& beta,
                                  SeededStream& rng) {
  const HierCache cache = make_hier_cache(spec);
  return hier_alpha_draw(spec, cache, zeta, beta, rng);
}

Chain run_hierarchical_chain(const HierarchicalSpec& spec,
                             const Dataset& dataset,
                             const SamplerConfig& cfg) {
  check_config(cfg);
  check_hier_spec(spec, dataset);
  const int n = dataset.n();
  const int d = dataset.d();
  const int kappa = static_cast<int>(spec.B.cols());
  const int K = static_cast<int>(spec.C.rows());
  const int M = static_cast<int>(spec.W.size());
  const auto t0 = std::chrono::steady_clock::now();

  const HierCache cache = make_hier_cache(spec);
  const Eigen::MatrixXd Cd = spec.C.cast<double>();

  ChainState state;
  state.zeta = init_latent(dataset);
  state.u_cache = initial_duals(dataset);
  state.accept_counts = Eigen::VectorXi::Zero(n);
  state.update_counts = Eigen::VectorXi::Zero(n);
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(kappa, K);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(M);

  std::vector<SeededStream> obs_streams;
  obs_streams.reserve(n);
  for (int i = 0; i < n; ++i) obs_streams.emplace_back(cfg.seed, i);
  SeededStream beta_stream(cfg.seed, kBetaStreamId);
  SeededStream alpha_stream(cfg.seed, kAlphaStreamId);

  BlockAdapter adapter(std::min(d, cfg.block_size));
  auto blocks = round_robin_blocks(d, adapter.current);

  const long retained = (cfg.iterations - cfg.burnin) / cfg.thin;
  Chain chain;
  chain.names = matrix_names("beta", kappa, K);
  for (int m = 1; m <= M; ++m)
    chain.names.push_back("alpha_" + std::to_string(m));
  chain.samples.resize(retained, static_cast<long>(kappa) * K + M);

  long row = 0;
  long last_accept = 0, last_total = 0;
  for (long t = 1; t <= cfg.iterations; ++t) {
    Eigen::MatrixXd mu = spec.B * beta * Cd;
    for (int m = 0; m < M; ++m) mu += alpha[m] * spec.W[m];
    const auto& block = blocks[(t - 1) % blocks.size()];
    parallel_for(n, cfg.threads, [&](int i) {
      const Eigen::VectorXi y = dataset.Y.row(i).transpose();
      Eigen::VectorXd zrow = state.zeta.row(i).transpose();
      Eigen::VectorXd urow = state.u_cache.row(i).transpose();
      const Eigen::VectorXd mu_i = mu.row(i).transpose();
      bool accepted;
      try {
        accepted =
            zeta_step(y, mu_i, zrow, urow, block, dataset.cs, cfg, obs_streams[i]);
      } catch (const EmptyDualPolytope& e) {
        throw EmptyDualPolytope("observation " + std::to_string(i) + ": " +
                                e.what());
      }
      state.zeta.row(i) = zrow.transpose();
      state.u_cache.row(i) = urow.transpose();
      state.accept_counts[i] += accepted ? 1 : 0;
      state.update_counts[i] += 1;
    });
    beta = hier_beta_draw(spec, cache, state.zeta, alpha, beta_stream);
    if (M > 0) alpha = hier_alpha_draw(spec, cache, state.zeta, beta, alpha_stream);
    state.iteration = t;
    const long acc = state.accept_counts.cast<long>().sum();
    const long tot = state.update_counts.cast<long>().sum();
    if (adapter.observe(acc - last_accept, tot - last_total))
      blocks = round_robin_blocks(d, adapter.current);
    last_accept = acc;
    last_total = tot;
    if (t > cfg.burnin && (t - cfg.burnin) % cfg.thin == 0 && row < retained) {
      long c = 0;
      for (int r = 0; r < kappa; ++r)
        for (int k = 0; k < K; ++k) chain.samples(row, c++) = beta(r, k);
      for (int m = 0; m < M; ++m) chain.samples(row, c++) = alpha[m];
      ++row;
    }
  }

  chain.meta.seed = cfg.seed;
  chain.meta.iterations = cfg.iterations;
  chain.meta.burnin = cfg.burnin;
  chain.meta.thin = cfg.thin;
  chain.meta.block_size = std::min(d, cfg.block_size);
  chain.meta.model = "hierarchical";
  chain.meta.d = d;
  chain.meta.p = 0;
  chain.meta.kappa = kappa;
  chain.meta.num_groups = K;
  chain.meta.num_fixed_terms = M;
  chain.meta.acceptance_rates.resize(n);
  for (int i = 0; i < n; ++i)
    chain.meta.acceptance_rates[i] =
        state.update_counts[i] > 0
            ? static_cast<double>(state.accept_counts[i]) / state.update_counts[i]
            : 0.0;
  chain.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return chain;
}

}  // namespace combresp
