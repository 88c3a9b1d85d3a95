#include "vbmi/json_io.hpp"

#include <fstream>
#include <sstream>

#include "vbmi/error.hpp"

namespace vbmi {

namespace {

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "matrix must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorCode::DimensionMismatch, "matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) M(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return M;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const VariableSpec& v) {
  json j{{"name", v.name}, {"kind", v.is_categorical() ? "categorical" : "continuous"}};
  if (v.is_categorical()) {
    if (v.category_labels.empty()) j["categories"] = v.categories;
    else j["categories"] = v.category_labels;
  }
  return j;
}

VariableSpec variable_from_json(const json& j) {
  try {
    const std::string name = j.at("name").get<std::string>();
    const std::string kind = j.value("kind", std::string("continuous"));
    if (kind == "continuous") return VariableSpec::continuous(name);
    if (kind != "categorical") throw Error(ErrorCode::InvalidSchema, "unknown kind '" + kind + "'");
    const auto& c = j.at("categories");
    if (c.is_number_integer()) return VariableSpec::categorical(name, c.get<int>());
    auto labels = c.get<std::vector<std::string>>();
    const int G = static_cast<int>(labels.size());
    return VariableSpec::categorical(name, G, std::move(labels));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSchema, e.what());
  }
}

json to_json(const Schema& s) {
  json vars = json::array();
  for (const auto& v : s.variables) vars.push_back(to_json(v));
  return {{"cluster_column", s.cluster_column}, {"na_token", s.na_token}, {"variables", vars}};
}

Schema schema_from_json(const json& j) {
  Schema s;
  try {
    read_if(j, "cluster_column", s.cluster_column);
    read_if(j, "na_token", s.na_token);
    for (const auto& v : j.at("variables")) s.variables.push_back(variable_from_json(v));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSchema, e.what());
  }
  s.validate();
  return s;
}

Schema load_schema(const std::string& path) { return schema_from_json(read_json_file(path)); }

void save_schema(const Schema& schema, const std::string& path) { write_text_file(path, to_json(schema).dump(2) + "\n"); }

json to_json(const Hyperparameters& h) {
  return {{"a_w", h.a_w}, {"b_w", h.b_w}, {"a1", h.a1}, {"b1", h.b1}, {"nu", h.nu}, {"V_inv", matrix_to_json(h.V_inv)}};
}

Hyperparameters hyper_from_json(const json& j, std::size_t l) {
  Hyperparameters h = Hyperparameters::defaults(l);
  try {
    read_if(j, "a_w", h.a_w);
    read_if(j, "b_w", h.b_w);
    read_if(j, "a1", h.a1);
    read_if(j, "b1", h.b1);
    read_if(j, "nu", h.nu);
    if (j.contains("V_inv")) h.V_inv = matrix_from_json(j.at("V_inv"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  h.validate(l);
  return h;
}

json to_json(const FitOptions& o) {
  return {{"max_iters", o.max_iters}, {"tol", o.tol},           {"seed", o.seed},
          {"spike_enabled", o.spike_enabled}, {"alt_forms", o.alt_forms}};
}

FitOptions fit_options_from_json(const json& j, FitOptions o) {
  try {
    read_if(j, "max_iters", o.max_iters);
    read_if(j, "tol", o.tol);
    read_if(j, "seed", o.seed);
    read_if(j, "spike_enabled", o.spike_enabled);
    read_if(j, "alt_forms", o.alt_forms);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  o.validate();
  return o;
}

json to_json(const VariationalState& s) {
  json mu_b = json::array(), psi_b = json::array();
  for (const auto& v : s.mu_b) mu_b.push_back(vector_to_json(v));
  for (const auto& P : s.Psi_b) psi_b.push_back(matrix_to_json(P));
  return {{"mu_y", vector_to_json(s.mu_y)},
          {"sigma2_y", vector_to_json(s.sigma2_y)},
          {"theta", vector_to_json(s.theta)},
          {"mu_beta", vector_to_json(s.mu_beta)},
          {"sigma2_beta", vector_to_json(s.sigma2_beta)},
          {"mu_b", mu_b},
          {"Psi_b", psi_b},
          {"a_e", s.a_e},
          {"b_e", s.b_e},
          {"Psi", matrix_to_json(s.Psi)},
          {"mu_mu0", s.mu_mu0},
          {"sigma2_mu0", s.sigma2_mu0},
          {"a_s0", s.a_s0},
          {"b_s0", s.b_s0},
          {"a_w", s.a_w},
          {"b_w", s.b_w}};
}

json to_json(const FitDiagnostics& d) {
  return {{"iterations_run", d.iterations_run},
          {"converged", d.converged},
          {"final_change", d.final_change},
          {"trace", d.trace}};
}

json to_json(const SimConfig& c) {
  return {{"m", c.m},
          {"n", c.n},
          {"p", c.p},
          {"l", c.l},
          {"scenario", to_string(c.scenario)},
          {"K", c.K},
          {"replicates", c.replicates},
          {"M", c.M},
          {"miss_target", c.miss_target},
          {"beta_mis", c.beta_mis},
          {"sigma_e", c.sigma_e},
          {"master_seed", c.master_seed},
          {"compare_dense", c.compare_dense},
          {"rounding_baseline", c.rounding_baseline},
          {"fit", to_json(c.fit)}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  try {
    if (j.value("full_scale", false)) c = SimConfig::full_scale(parse_scenario(j.value("scenario", std::string("continuous"))));
    if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario").get<std::string>());
    read_if(j, "m", c.m);
    read_if(j, "n", c.n);
    read_if(j, "p", c.p);
    read_if(j, "l", c.l);
    read_if(j, "K", c.K);
    read_if(j, "replicates", c.replicates);
    read_if(j, "M", c.M);
    read_if(j, "miss_target", c.miss_target);
    read_if(j, "beta_mis", c.beta_mis);
    read_if(j, "sigma_e", c.sigma_e);
    read_if(j, "master_seed", c.master_seed);
    read_if(j, "compare_dense", c.compare_dense);
    read_if(j, "rounding_baseline", c.rounding_baseline);
    if (j.contains("fit")) c.fit = fit_options_from_json(j.at("fit"), c.fit);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  c.validate();
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

}  // namespace vbmi
