#include "combresp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "combresp/errors.hpp"

namespace combresp {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

std::string constraints_to_json(const ConstraintSystem& cs) {
  json j;
  j["d"] = cs.dim();
  j["m"] = cs.rows();
  json rows = json::array();
  for (int i = 0; i < cs.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < cs.dim(); ++k) row.push_back(cs.A(i, k));
    rows.push_back(row);
  }
  j["A"] = rows;
  json bj = json::array();
  for (int i = 0; i < cs.rows(); ++i) bj.push_back(cs.b[i]);
  j["b"] = bj;
  if (cs.label)
    j["label"] = *cs.label;
  else
    j["label"] = nullptr;
  return j.dump(2) + "\n";
}

ConstraintSystem constraints_from_json(const std::string& text) {
  const json j = parse_json(text, "constraints");
  try {
    const int d = j.at("d").get<int>();
    const int m = j.at("m").get<int>();
    if (d < 1) throw ParseError("constraints: d must be >= 1");
    Eigen::MatrixXi A(m, d);
    const json& rows = j.at("A");
    if (static_cast<int>(rows.size()) != m)
      throw ParseError("constraints: A has wrong row count");
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(rows[i].size()) != d)
        throw ParseError("constraints: A row " + std::to_string(i) +
                         " has wrong length");
      for (int k = 0; k < d; ++k) A(i, k) = rows[i][k].get<int>();
    }
    Eigen::VectorXi b(m);
    const json& bj = j.at("b");
    if (static_cast<int>(bj.size()) != m)
      throw ParseError("constraints: b has wrong length");
    for (int i = 0; i < m; ++i) b[i] = bj[i].get<int>();
    std::optional<std::string> label;
    if (j.contains("label") && !j["label"].is_null())
      label = j["label"].get<std::string>();
    return new_constraint_system(std::move(A), std::move(b), std::move(label));
  } catch (const json::exception& e) {
    throw ParseError(std::string("constraints: ") + e.what());
  }
}

ConstraintSystem load_constraints(const std::string& path) {
  return constraints_from_json(read_file(path));
}

void save_constraints(const ConstraintSystem& cs, const std::string& path) {
  write_file(path, constraints_to_json(cs));
}

void save_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  const int d = dataset.d();
  const int p = dataset.p();
  const bool intercept_only =
      p == 1 && (dataset.X.array() == 1.0).all();
  for (int j = 0; j < d; ++j) out << (j ? "," : "") << "y_" << (j + 1);
  if (!intercept_only)
    for (int k = 0; k < p; ++k) out << ",x_" << (k + 1);
  out << "\n";
  for (int i = 0; i < dataset.n(); ++i) {
    for (int j = 0; j < d; ++j) out << (j ? "," : "") << dataset.Y(i, j);
    if (!intercept_only)
      for (int k = 0; k < p; ++k) out << "," << fmt(dataset.X(k, i));
    out << "\n";
  }
}

Dataset load_dataset_csv(const std::string& path, ConstraintSystem cs) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv_line(line);
  int d = 0, p = 0;
  for (const auto& h : header) {
    if (h.rfind("y_", 0) == 0)
      ++d;
    else if (h.rfind("x_", 0) == 0)
      ++p;
    else
      throw ParseError(path + ": unexpected column '" + h + "'");
  }
  if (d != cs.dim())
    throw ParseError(path + ": " + std::to_string(d) +
                     " response columns but constraint system has d = " +
                     std::to_string(cs.dim()));
  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != d + p)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": wrong field count");
    std::vector<double> row;
    row.reserve(d + p);
    for (const auto& f : fields) {
      try {
        row.push_back(std::stod(f));
      } catch (...) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": bad number '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXi Y(n, d);
  Eigen::MatrixXd X = p > 0 ? Eigen::MatrixXd(p, n) : Eigen::MatrixXd::Ones(1, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double v = rows[i][j];
      if (v != 0.0 && v != 1.0)
        throw ParseError(path + ": row " + std::to_string(i) +
                         " has non-binary response " + fmt(v));
      Y(i, j) = static_cast<int>(v);
    }
    for (int k = 0; k < p; ++k) X(k, i) = rows[i][d + k];
  }
  return make_dataset(std::move(Y), std::move(X), std::move(cs));
}

void save_chain(const Chain& chain, const std::string& csv_path,
                const std::string& meta_path) {
  std::ofstream out(csv_path);
  if (!out) throw ParseError("cannot write " + csv_path);
  out << "iter";
  for (const auto& name : chain.names) out << "," << name;
  out << "\n";
  for (long s = 0; s < chain.samples.rows(); ++s) {
    out << chain.meta.burnin + (s + 1) * chain.meta.thin;
    for (long c = 0; c < chain.samples.cols(); ++c)
      out << "," << fmt(chain.samples(s, c));
    out << "\n";
  }
  json meta;
  meta["seed"] = chain.meta.seed;
  meta["iterations"] = chain.meta.iterations;
  meta["burnin"] = chain.meta.burnin;
  meta["thin"] = chain.meta.thin;
  meta["block_size"] = chain.meta.block_size;
  meta["acceptance_rates"] = chain.meta.acceptance_rates;
  meta["wall_seconds"] = chain.meta.wall_seconds;
  meta["model"] = chain.meta.model;
  meta["d"] = chain.meta.d;
  meta["p"] = chain.meta.p;
  meta["kappa"] = chain.meta.kappa;
  meta["num_groups"] = chain.meta.num_groups;
  meta["num_fixed_terms"] = chain.meta.num_fixed_terms;
  write_file(meta_path, meta.dump(2) + "\n");
}

Chain load_chain(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "iter")
    throw ParseError(csv_path + ": first column must be 'iter'");
  Chain chain;
  chain.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(csv_path + ": ragged row");
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c)
      row.push_back(std::stod(fields[c]));
    rows.push_back(std::move(row));
  }
  chain.samples.resize(static_cast<long>(rows.size()),
                       static_cast<long>(chain.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      chain.samples(static_cast<long>(i), static_cast<long>(c)) = rows[i][c];
  if (!meta_path.empty()) {
    const json meta = parse_json(read_file(meta_path), "chain metadata");
    try {
      chain.meta.seed = meta.value("seed", std::uint64_t{0});
      chain.meta.iterations = meta.value("iterations", 0L);
      chain.meta.burnin = meta.value("burnin", 0L);
      chain.meta.thin = meta.value("thin", 1L);
      chain.meta.block_size = meta.value("block_size", 0);
      if (meta.contains("acceptance_rates"))
        chain.meta.acceptance_rates =
            meta["acceptance_rates"].get<std::vector<double>>();
      chain.meta.wall_seconds = meta.value("wall_seconds", 0.0);
      chain.meta.model = meta.value("model", std::string{});
      chain.meta.d = meta.value("d", 0);
      chain.meta.p = meta.value("p", 0);
      chain.meta.kappa = meta.value("kappa", 0);
      chain.meta.num_groups = meta.value("num_groups", 0);
      chain.meta.num_fixed_terms = meta.value("num_fixed_terms", 0);
    } catch (const json::exception& e) {
      throw ParseError(std::string("chain metadata: ") + e.what());
    }
  }
  return chain;
}

void save_matrix_csv(const Eigen::MatrixXd& mat,
                     const std::vector<std::string>& names,
                     const std::string& path) {
  if (static_cast<long>(names.size()) != mat.cols())
    throw ShapeMismatch("save_matrix_csv: name count mismatch");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (std::size_t c = 0; c < names.size(); ++c)
    out << (c ? "," : "") << names[c];
  out << "\n";
  for (long i = 0; i < mat.rows(); ++i) {
    for (long c = 0; c < mat.cols(); ++c)
      out << (c ? "," : "") << fmt(mat(i, c));
    out << "\n";
  }
}

Eigen::MatrixXd load_matrix_csv(const std::string& path,
                                std::vector<std::string>* names) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (names) *names = header;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ParseError(path + ": ragged row");
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(std::stod(f));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd mat(static_cast<long>(rows.size()),
                      static_cast<long>(header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      mat(static_cast<long>(i), static_cast<long>(c)) = rows[i][c];
  return mat;
}

HierSpecFile hier_spec_from_json(const std::string& text) {
  const json j = parse_json(text, "hier spec");
  try {
    HierSpecFile f;
    f.kappa = j.at("kappa").get<int>();
    f.tau_beta = j.at("tau_beta").get<double>();
    const auto times = j.at("times").get<std::vector<double>>();
    f.times = Eigen::Map<const Eigen::VectorXd>(times.data(), times.size());
    const auto groups = j.at("group_of").get<std::vector<int>>();
    f.group_of = Eigen::Map<const Eigen::VectorXi>(groups.data(), groups.size());
    f.num_groups = j.at("num_groups").get<int>();
    const int d = static_cast<int>(f.group_of.size());
    for (const auto& term : j.value("w_terms", json::array())) {
      f.w_names.push_back(term.at("name").get<std::string>());
      const json& vals = term.at("values");
      Eigen::VectorXd v(d);
      if (vals.is_number()) {
        v.setConstant(vals.get<double>());
      } else {
        const auto vv = vals.get<std::vector<double>>();
        if (static_cast<int>(vv.size()) != d)
          throw ParseError("hier spec: w_term '" + f.w_names.back() +
                           "' needs one value per coordinate");
        v = Eigen::Map<const Eigen::VectorXd>(vv.data(), vv.size());
      }
      f.w_values.push_back(std::move(v));
    }
    const int M = static_cast<int>(f.w_values.size());
    f.v_alpha.resize(M, M);
    if (M > 0) {
      const json& va = j.at("v_alpha");
      if (static_cast<int>(va.size()) != M)
        throw ParseError("hier spec: v_alpha must be M x M");
      for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c) f.v_alpha(r, c) = va[r][c].get<double>();
    }
    return f;
  } catch (const json::exception& e) {
    throw ParseError(std::string("hier spec: ") + e.what());
  }
}

std::string hier_spec_to_json(const HierSpecFile& file) {
  json j;
  j["kappa"] = file.kappa;
  j["tau_beta"] = file.tau_beta;
  j["times"] = std::vector<double>(file.times.data(),
                                   file.times.data() + file.times.size());
  j["group_of"] = std::vector<int>(file.group_of.data(),
                                   file.group_of.data() + file.group_of.size());
  j["num_groups"] = file.num_groups;
  json terms = json::array();
  for (std::size_t m = 0; m < file.w_values.size(); ++m) {
    json term;
    term["name"] = m < file.w_names.size() ? file.w_names[m]
                                           : "w" + std::to_string(m + 1);
    term["values"] = std::vector<double>(
        file.w_values[m].data(),
        file.w_values[m].data() + file.w_values[m].size());
    terms.push_back(term);
  }
  j["w_terms"] = terms;
  json va = json::array();
  for (int r = 0; r < file.v_alpha.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < file.v_alpha.cols(); ++c) row.push_back(file.v_alpha(r, c));
    va.push_back(row);
  }
  j["v_alpha"] = va;
  return j.dump(2) + "\n";
}

HierSpecFile load_hier_spec(const std::string& path) {
  return hier_spec_from_json(read_file(path));
}

void save_hier_spec(const HierSpecFile& file, const std::string& path) {
  write_file(path, hier_spec_to_json(file));
}

HierarchicalSpec build_hier_spec(const HierSpecFile& file) {
  HierarchicalSpec spec;
  const int n = static_cast<int>(file.times.size());
  const int d = static_cast<int>(file.group_of.size());
  spec.B = bspline_design(file.times, file.kappa);
  spec.C = Eigen::MatrixXi::Zero(file.num_groups, d);
  for (int j = 0; j < d; ++j) {
    const int g = file.group_of[j];
    if (g < 0 || g >= file.num_groups)
      throw ParseError("hier spec: group index out of range at coordinate " +
                       std::to_string(j));
    spec.C(g, j) = 1;
  }
  for (const auto& v : file.w_values)
    spec.W.push_back(v.transpose().replicate(n, 1));
  spec.V_alpha = file.v_alpha;
  spec.tau_beta = file.tau_beta;
  return spec;
}

Eigen::VectorXd hier_mean_at(const HierSpecFile& file, const BSplineBasis& basis,
                             const Eigen::MatrixXd& beta,
                             const Eigen::VectorXd& alpha, double t) {
  const int d = static_cast<int>(file.group_of.size());
  const Eigen::RowVectorXd brow = basis.eval(t);
  const Eigen::RowVectorXd group_effect = brow * beta;  // 1 x K
  Eigen::VectorXd mu(d);
  for (int j = 0; j < d; ++j) mu[j] = group_effect[file.group_of[j]];
  for (long m = 0; m < alpha.size(); ++m) mu += alpha[m] * file.w_values[m];
  return mu;
}

namespace {

EventPredicate predicate_from_json(const json& j) {
  EventPredicate pred;
  const std::string mode = j.value("mode", std::string("all"));
  if (mode == "all")
    pred.require_all = true;
  else if (mode == "any")
    pred.require_all = false;
  else
    throw ParseError("query predicate: mode must be 'all' or 'any'");
  for (const auto& cj : j.at("clauses")) {
    EventPredicate::Clause cl;
    cl.indices = cj.at("indices").get<std::vector<int>>();
    const std::string op = cj.at("op").get<std::string>();
    if (op == "<=")
      cl.op = EventPredicate::Op::LE;
    else if (op == ">=")
      cl.op = EventPredicate::Op::GE;
    else if (op == "==")
      cl.op = EventPredicate::Op::EQ;
    else
      throw ParseError("query predicate: op must be <=, >= or ==");
    cl.target = cj.at("target").get<int>();
    pred.clauses.push_back(std::move(cl));
  }
  return pred;
}

json predicate_to_json(const EventPredicate& pred) {
  json j;
  j["mode"] = pred.require_all ? "all" : "any";
  json clauses = json::array();
  for (const auto& cl : pred.clauses) {
    json cj;
    cj["indices"] = cl.indices;
    cj["op"] = cl.op == EventPredicate::Op::LE   ? "<="
               : cl.op == EventPredicate::Op::GE ? ">="
                                                 : "==";
    cj["target"] = cl.target;
    clauses.push_back(cj);
  }
  j["clauses"] = clauses;
  return j;
}

}  // namespace

std::vector<NamedQuery> load_queries(const std::string& path) {
  const json j = parse_json(read_file(path), "queries");
  std::vector<NamedQuery> out;
  try {
    for (const auto& qj : j.at("queries")) {
      NamedQuery nq;
      nq.name = qj.at("name").get<std::string>();
      nq.query.event = predicate_from_json(qj.at("event"));
      if (qj.contains("given") && !qj["given"].is_null())
        nq.query.given = predicate_from_json(qj["given"]);
      out.push_back(std::move(nq));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("queries: ") + e.what());
  }
  if (out.empty()) throw ParseError("queries: no entries");
  return out;
}

std::string queries_to_json(const std::vector<NamedQuery>& queries) {
  json arr = json::array();
  for (const auto& nq : queries) {
    json qj;
    qj["name"] = nq.name;
    qj["event"] = predicate_to_json(nq.query.event);
    if (nq.query.given)
      qj["given"] = predicate_to_json(*nq.query.given);
    else
      qj["given"] = nullptr;
    arr.push_back(qj);
  }
  json j;
  j["queries"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace combresp
