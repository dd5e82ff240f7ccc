// Command-line surface: check constraint systems, simulate datasets, fit
// chains, predict outcome laws / event curves, and summarize chains.
// Exit codes: 0 success, 1 usage or parse failure, 2 domain failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "combresp/constraints.hpp"
#include "combresp/distributions.hpp"
#include "combresp/errors.hpp"
#include "combresp/inference.hpp"
#include "combresp/io.hpp"
#include "combresp/mcmc.hpp"
#include "combresp/transform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace combresp;

namespace {

constexpr std::uint64_t kSimStreamId = 7001;
constexpr std::uint64_t kPredictStreamId = 7002;

std::string fmtg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_resolved_config(CLI::App* sub, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / (sub->get_name() + "_resolved.cfg"));
  out << sub->config_to_str(true, true);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    out.push_back(std::stod(field));
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ';')) {
    if (field.empty()) continue;
    const auto dash = field.find('-');
    if (dash == std::string::npos)
      throw ParseError("expected 'a-b' pairs separated by ';', got '" + field +
                       "'");
    out.emplace_back(std::stoi(field.substr(0, dash)),
                     std::stoi(field.substr(dash + 1)));
  }
  return out;
}

std::string meta_path_for(const std::string& chain_path) {
  fs::path p(chain_path);
  p.replace_extension();
  return p.string() + "_meta.json";
}

std::string outcome_bits(const Eigen::VectorXi& y) {
  std::string s(y.size(), '0');
  for (int j = 0; j < y.size(); ++j) s[j] = y[j] ? '1' : '0';
  return s;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string constraints;
  std::string family;
  int d = 2;
  int M = 1;
  int left = 0, right = 0;
  bool complete = false;
  std::string edges;
  std::string pairs;
  std::string base;
  std::string emit;
};

int run_check(const CheckArgs& a) {
  ConstraintSystem cs = [&] {
    if (!a.constraints.empty()) return load_constraints(a.constraints);
    if (a.family == "cardinality") return build_cardinality(a.d, a.M);
    if (a.family == "matching") {
      BipartiteGraph g;
      g.left_nodes = a.left;
      g.right_nodes = a.right;
      if (a.complete) {
        for (int l = 0; l < a.left; ++l)
          for (int r = 0; r < a.right; ++r) g.edges.emplace_back(l, r);
      } else {
        for (const auto& [l, r] : parse_pairs(a.edges)) g.edges.emplace_back(l, r);
      }
      return build_matching(g);
    }
    if (a.family == "partial-order")
      return build_partial_order(a.d, parse_pairs(a.pairs));
    if (a.family == "equality") {
      const ConstraintSystem base = load_constraints(a.base);
      return build_equality(base.A, base.b);
    }
    throw ParseError("check: pass --constraints FILE or --family NAME");
  }();

  bool tum = false;
  bool tum_known = true;
  try {
    tum = is_tum(cs.A);
  } catch (const SizeLimitExceeded&) {
    tum_known = false;
  }
  std::cout << "TUM: " << (tum_known ? (tum ? "yes" : "no") : "unknown (over budget)")
            << "\n";

  // TUM with integer b is sufficient for integrality; otherwise fall back to
  // exact vertex enumeration when the system is small enough.
  std::optional<bool> integral;
  if (tum_known && tum) {
    integral = true;
  } else {
    try {
      integral = verify_integral(cs);
    } catch (const SizeLimitExceeded&) {
    }
  }
  if (integral)
    std::cout << "integral: " << (*integral ? "yes" : "no") << "\n";
  else
    std::cout << "integral: unknown (enumeration over budget)\n";

  if (cs.dim() <= 20)
    std::cout << "feasible outcomes: " << enumerate_feasible(cs).size() << "\n";

  if (!a.emit.empty()) save_constraints(cs, a.emit);
  return (integral && *integral) ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string constraints;
  std::string out_dir;
  int n = 1000;
  int p = 5;
  std::uint64_t seed = 1;
  double tau = 10.0;
  std::string beta_truth;
  std::string hier;
};

int run_simulate(const SimulateArgs& a, CLI::App* sub) {
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  ConstraintSystem cs = load_constraints(a.constraints);
  const int d = cs.dim();
  SeededStream rng(a.seed, kSimStreamId);

  if (!a.hier.empty()) {
    const HierSpecFile file = load_hier_spec(a.hier);
    const HierarchicalSpec spec = build_hier_spec(file);
    const int n = static_cast<int>(file.times.size());
    const int kappa = spec.B.cols();
    const int K = spec.C.rows();
    const int M = static_cast<int>(spec.W.size());
    const Eigen::VectorXi s = group_sizes(spec);
    Eigen::MatrixXd beta(kappa, K);
    for (int k = 0; k < K; ++k)
      for (int r = 0; r < kappa; ++r)
        beta(r, k) = rng.normal() / std::sqrt(spec.tau_beta * s[k]);
    Eigen::VectorXd alpha(M);
    if (M > 0) {
      Eigen::LLT<Eigen::MatrixXd> lv(spec.V_alpha);
      if (lv.info() != Eigen::Success)
        throw NotPositiveDefinite("simulate: v_alpha is not SPD");
      Eigen::VectorXd z(M);
      for (int m = 0; m < M; ++m) z[m] = rng.normal();
      alpha = lv.matrixL() * z;
    }
    Eigen::MatrixXd mu = spec.B * beta * spec.C.cast<double>();
    for (int m = 0; m < M; ++m) mu += alpha[m] * spec.W[m];
    Eigen::MatrixXi Y(n, d);
    Eigen::VectorXd zeta(d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) zeta[j] = mu(i, j) + rng.normal();
      Y.row(i) = apply_transform(zeta, cs).transpose();
    }
    Dataset ds = make_dataset(std::move(Y), Eigen::MatrixXd::Ones(1, n), cs);
    save_dataset_csv(ds, (out / "data.csv").string());
    Eigen::MatrixXd truth(1, static_cast<long>(kappa) * K + M);
    long c = 0;
    for (int r = 0; r < kappa; ++r)
      for (int k = 0; k < K; ++k) truth(0, c++) = beta(r, k);
    for (int m = 0; m < M; ++m) truth(0, c++) = alpha[m];
    std::vector<std::string> names;
    for (int r = 1; r <= kappa; ++r)
      for (int k = 1; k <= K; ++k)
        names.push_back("beta_" + std::to_string(r) + "_" + std::to_string(k));
    for (int m = 1; m <= M; ++m) names.push_back("alpha_" + std::to_string(m));
    save_matrix_csv(truth, names, (out / "beta_truth.csv").string());
    write_resolved_config(sub, out);
    std::cout << "wrote " << n << " rows to " << (out / "data.csv") << "\n";
    return 0;
  }

  const int p = std::max(a.p, 0);
  const int pcols = std::max(p, 1);
  Eigen::MatrixXd beta(d, pcols);
  if (!a.beta_truth.empty()) {
    std::vector<std::string> names;
    const Eigen::MatrixXd flat = load_matrix_csv(a.beta_truth, &names);
    if (flat.size() != static_cast<long>(d) * pcols)
      throw ParseError("simulate: truth file has wrong parameter count");
    long c = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < pcols; ++j) beta(i, j) = flat(0, c++);
  } else {
    const double sd = std::sqrt(a.tau);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < pcols; ++j) beta(i, j) = sd * rng.normal();
  }
  Eigen::MatrixXd X(pcols, a.n);
  if (p == 0) {
    X.setOnes();
  } else {
    for (int k = 0; k < p; ++k)
      for (int i = 0; i < a.n; ++i) X(k, i) = rng.normal();
  }
  Eigen::MatrixXi Y(a.n, d);
  Eigen::VectorXd zeta(d);
  for (int i = 0; i < a.n; ++i) {
    const Eigen::VectorXd mu = beta * X.col(i);
    for (int j = 0; j < d; ++j) zeta[j] = mu[j] + rng.normal();
    Y.row(i) = apply_transform(zeta, cs).transpose();
  }
  Dataset ds = make_dataset(std::move(Y), std::move(X), cs);
  if (p == 0) {
    // intercept-only files carry no x columns
    Dataset tmp = ds;
    save_dataset_csv(tmp, (out / "data.csv").string());
  } else {
    save_dataset_csv(ds, (out / "data.csv").string());
  }
  Eigen::MatrixXd truth(1, static_cast<long>(d) * pcols);
  long c = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < pcols; ++j) truth(0, c++) = beta(i, j);
  std::vector<std::string> names;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= pcols; ++j)
      names.push_back("beta_" + std::to_string(i) + "_" + std::to_string(j));
  save_matrix_csv(truth, names, (out / "beta_truth.csv").string());
  write_resolved_config(sub, out);
  std::cout << "wrote " << a.n << " rows to " << (out / "data.csv") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string constraints;
  std::string data;
  std::string out_dir;
  SamplerConfig cfg;
  bool intercept = false;
  std::string hier;
};

int run_fit(const FitArgs& a, CLI::App* sub) {
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  ConstraintSystem cs = load_constraints(a.constraints);
  Dataset ds = load_dataset_csv(a.data, cs);
  Chain chain;
  if (!a.hier.empty()) {
    const HierSpecFile file = load_hier_spec(a.hier);
    chain = run_hierarchical_chain(build_hier_spec(file), ds, a.cfg);
  } else if (a.intercept || ds.p() == 1) {
    chain = run_intercept_chain(ds, a.cfg);
  } else {
    chain = run_chain(ds, a.cfg);
  }
  save_chain(chain, (out / "chain.csv").string(),
             (out / "chain_meta.json").string());
  write_resolved_config(sub, out);
  std::cout << "retained " << chain.samples.rows() << " draws in "
            << fmtg(chain.meta.wall_seconds) << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string constraints;
  std::string chain;
  std::string chain_meta;
  std::string out_dir;
  std::string x_new;
  std::string query_file;
  std::string hier;
  std::string time_grid;
  long mc_draws = 2000;
  std::uint64_t seed = 1;
};

int run_predict(const PredictArgs& a, CLI::App* sub) {
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  ConstraintSystem cs = load_constraints(a.constraints);
  const std::string meta =
      a.chain_meta.empty() ? meta_path_for(a.chain) : a.chain_meta;
  Chain chain = load_chain(a.chain, meta);
  SeededStream rng(a.seed, kPredictStreamId);

  if (!a.hier.empty()) {
    if (a.time_grid.empty() || a.query_file.empty())
      throw ParseError("predict: hierarchical curves need --time-grid and --query");
    const HierSpecFile file = load_hier_spec(a.hier);
    const auto queries = load_queries(a.query_file);
    const auto grid = parse_double_list(a.time_grid);
    if (grid.size() != 3)
      throw ParseError("predict: --time-grid expects 'start,stop,count'");
    const int count = static_cast<int>(grid[2]);
    if (count < 2) throw ParseError("predict: time grid needs >= 2 points");
    const BSplineBasis basis = make_bspline_basis(
        file.times.minCoeff(), file.times.maxCoeff(), file.kappa);
    const int kappa = file.kappa;
    const int K = file.num_groups;
    const int M = static_cast<int>(file.w_values.size());
    const long S = chain.samples.rows();
    if (chain.samples.cols() != static_cast<long>(kappa) * K + M)
      throw ParseError("predict: chain does not match the hierarchical spec");

    std::ofstream curves(out / "curves.csv");
    curves << "t,group,prob_mean,prob_lo,prob_hi\n";
    for (const auto& nq : queries) {
      for (int g = 0; g < count; ++g) {
        const double t =
            grid[0] + (grid[1] - grid[0]) * g / static_cast<double>(count - 1);
        const auto mu_of = [&](int s) {
          Eigen::MatrixXd beta(kappa, K);
          long c = 0;
          for (int r = 0; r < kappa; ++r)
            for (int k = 0; k < K; ++k) beta(r, k) = chain.samples(s, c++);
          Eigen::VectorXd alpha(M);
          for (int m = 0; m < M; ++m) alpha[m] = chain.samples(s, c++);
          return hier_mean_at(file, basis, beta, alpha, t);
        };
        const EventEstimate est = event_probability_core(
            static_cast<int>(S), mu_of, cs, nq.query, a.mc_draws, rng);
        curves << fmtg(t) << "," << nq.name << "," << fmtg(est.prob_mean) << ","
               << fmtg(est.prob_lo) << "," << fmtg(est.prob_hi) << "\n";
      }
    }
    write_resolved_config(sub, out);
    std::cout << "wrote " << (out / "curves.csv") << "\n";
    return 0;
  }

  if (a.x_new.empty()) throw ParseError("predict: pass --x-new or --hier");
  const auto xv = parse_double_list(a.x_new);
  const Eigen::VectorXd x_new =
      Eigen::Map<const Eigen::VectorXd>(xv.data(), xv.size());

  if (!a.query_file.empty()) {
    const auto queries = load_queries(a.query_file);
    std::ofstream curves(out / "curves.csv");
    curves << "t,group,prob_mean,prob_lo,prob_hi\n";
    for (const auto& nq : queries) {
      const EventEstimate est =
          event_probability(chain, x_new, cs, nq.query, a.mc_draws, rng);
      curves << "0," << nq.name << "," << fmtg(est.prob_mean) << ","
             << fmtg(est.prob_lo) << "," << fmtg(est.prob_hi) << "\n";
    }
    write_resolved_config(sub, out);
    std::cout << "wrote " << (out / "curves.csv") << "\n";
    return 0;
  }

  const OutcomeLaw law = predict_outcome_law(chain, x_new, cs, a.mc_draws, rng);
  std::ofstream lawcsv(out / "law.csv");
  lawcsv << "outcome_bits,prob_mean,prob_lo,prob_hi\n";
  for (std::size_t k = 0; k < law.outcomes.size(); ++k)
    lawcsv << outcome_bits(law.outcomes[k]) << "," << fmtg(law.prob_mean[k])
           << "," << fmtg(law.prob_lo[k]) << "," << fmtg(law.prob_hi[k]) << "\n";
  write_resolved_config(sub, out);
  std::cout << "wrote " << (out / "law.csv") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string chain;
  std::string chain_meta;
  std::string out_dir;
  int max_lag = 50;
  std::string truth;
};

int run_diagnose(const DiagnoseArgs& a, CLI::App* sub) {
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const std::string meta =
      a.chain_meta.empty() ? meta_path_for(a.chain) : a.chain_meta;
  Chain chain = load_chain(a.chain, meta);
  if (chain.samples.rows() == 0) throw EmptyChain("diagnose: empty chain");

  json summary;
  json params = json::array();
  const auto stats = posterior_summary(chain);
  json acf_errors = json::object();

  std::ofstream acfcsv(out / "acf.csv");
  acfcsv << "param,lag,acf\n";
  const int lag = std::min<long>(a.max_lag, chain.samples.rows() - 1);
  for (long c = 0; c < chain.samples.cols(); ++c) {
    try {
      const Eigen::VectorXd ac = acf(chain.samples.col(c), lag);
      for (int k = 0; k <= lag; ++k)
        acfcsv << chain.names[c] << "," << k << "," << fmtg(ac[k]) << "\n";
    } catch (const Error& e) {
      acf_errors[chain.names[c]] = e.what();
    }
  }
  for (const auto& ps : stats) {
    json pj;
    pj["name"] = ps.name;
    pj["mean"] = ps.mean;
    pj["sd"] = ps.sd;
    pj["q025"] = ps.q025;
    pj["q50"] = ps.q50;
    pj["q975"] = ps.q975;
    params.push_back(pj);
  }
  summary["params"] = params;
  summary["acceptance_rates"] = chain.meta.acceptance_rates;
  summary["acf_errors"] = acf_errors;
  if (!a.truth.empty()) {
    std::vector<std::string> names;
    const Eigen::MatrixXd truth = load_matrix_csv(a.truth, &names);
    if (truth.size() != chain.samples.cols())
      throw ParseError("diagnose: truth file does not match the chain");
    Eigen::MatrixXd post_mean = chain.samples.colwise().mean();
    summary["rmse_vs_truth"] = rmse(post_mean, truth);
  }
  std::ofstream sj(out / "summary.json");
  sj << summary.dump(2) << "\n";
  write_resolved_config(sub, out);
  std::cout << "wrote " << (out / "summary.json") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference engine for combinatorial response data"};
  app.require_subcommand(1);
  app.set_config("--config");

  CheckArgs check_args;
  auto* check = app.add_subcommand(
      "check", "Report TUM/integrality of a constraint system");
  check->alias("check-tum");
  check->add_option("--constraints", check_args.constraints,
                    "Constraint JSON file");
  check->add_option("--family", check_args.family,
                    "Builder family: cardinality|matching|partial-order|equality");
  check->add_option("--d", check_args.d, "Dimension (cardinality/partial-order)");
  check->add_option("--M", check_args.M, "Cardinality bound");
  check->add_option("--left", check_args.left, "Left node count (matching)");
  check->add_option("--right", check_args.right, "Right node count (matching)");
  check->add_flag("--complete", check_args.complete,
                  "Use the complete bipartite edge set");
  check->add_option("--edges", check_args.edges,
                    "Edge list 'l-r;l-r;...' (matching)");
  check->add_option("--pairs", check_args.pairs,
                    "Order pairs 'j-k;j-k;...' (partial-order, 0-based)");
  check->add_option("--base", check_args.base,
                    "Base system JSON for --family equality");
  check->add_option("--emit", check_args.emit, "Write the system to this file");

  SimulateArgs sim_args;
  auto* simulate =
      app.add_subcommand("simulate", "Generate data from the latent model");
  simulate->add_option("--constraints", sim_args.constraints)->required();
  simulate->add_option("--out", sim_args.out_dir)->required();
  simulate->add_option("--n", sim_args.n, "Observations");
  simulate->add_option("--p", sim_args.p, "Covariate count (0 = intercept only)");
  simulate->add_option("--seed", sim_args.seed);
  simulate->add_option("--tau", sim_args.tau, "Prior scale for drawn truth");
  simulate->add_option("--beta-truth", sim_args.beta_truth,
                       "Use the coefficients from this CSV instead of a draw");
  simulate->add_option("--hier", sim_args.hier, "Hierarchical spec JSON");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit->add_option("--constraints", fit_args.constraints)->required();
  fit->add_option("--data", fit_args.data)->required();
  fit->add_option("--out", fit_args.out_dir)->required();
  fit->add_option("--iters", fit_args.cfg.iterations);
  fit->add_option("--burnin", fit_args.cfg.burnin);
  fit->add_option("--thin", fit_args.cfg.thin);
  fit->add_option("--seed", fit_args.cfg.seed);
  fit->add_option("--tau", fit_args.cfg.tau);
  fit->add_option("--block-size", fit_args.cfg.block_size);
  fit->add_option("--hitrun-steps", fit_args.cfg.hitrun_steps);
  fit->add_option("--threads", fit_args.cfg.threads);
  fit->add_flag("--intercept", fit_args.intercept,
                "Force the intercept-only model");
  fit->add_option("--hier", fit_args.hier, "Hierarchical spec JSON");

  PredictArgs pred_args;
  auto* predict = app.add_subcommand(
      "predict", "Posterior predictive laws, events and curves");
  predict->add_option("--constraints", pred_args.constraints)->required();
  predict->add_option("--chain", pred_args.chain)->required();
  predict->add_option("--chain-meta", pred_args.chain_meta);
  predict->add_option("--out", pred_args.out_dir)->required();
  predict->add_option("--x-new", pred_args.x_new, "Covariate vector 'v,v,...'");
  predict->add_option("--query", pred_args.query_file, "Query JSON file");
  predict->add_option("--hier", pred_args.hier, "Hierarchical spec JSON");
  predict->add_option("--time-grid", pred_args.time_grid,
                      "Grid 'start,stop,count' for curves");
  predict->add_option("--mc-draws", pred_args.mc_draws);
  predict->add_option("--seed", pred_args.seed);

  DiagnoseArgs diag_args;
  auto* diagnose =
      app.add_subcommand("diagnose", "ACF and posterior summaries of a chain");
  diagnose->add_option("--chain", diag_args.chain)->required();
  diagnose->add_option("--chain-meta", diag_args.chain_meta);
  diagnose->add_option("--out", diag_args.out_dir)->required();
  diagnose->add_option("--max-lag", diag_args.max_lag);
  diagnose->add_option("--truth", diag_args.truth,
                       "Truth CSV; adds rmse_vs_truth to the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (check->parsed()) return run_check(check_args);
    if (simulate->parsed()) return run_simulate(sim_args, simulate);
    if (fit->parsed()) return run_fit(fit_args, fit);
    if (predict->parsed()) return run_predict(pred_args, predict);
    if (diagnose->parsed()) return run_diagnose(diag_args, diagnose);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
