#include "vbmi/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "vbmi/error.hpp"

namespace vbmi {

VariableSpec VariableSpec::continuous(std::string name) {
  VariableSpec v;
  v.name = std::move(name);
  return v;
}

VariableSpec VariableSpec::categorical(std::string name, int G, std::vector<std::string> labels) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::Categorical;
  v.categories = G;
  v.category_labels = std::move(labels);
  v.validate();
  return v;
}

void VariableSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidSchema, "variable with empty name");
  if (kind == VariableKind::Continuous) {
    if (!category_labels.empty())
      throw Error(ErrorCode::InvalidSchema, "continuous variable '" + name + "' has labels");
    return;
  }
  if (categories < 2) throw Error(ErrorCode::InvalidSchema, "categorical variable '" + name + "' needs G >= 2");
  if (!category_labels.empty()) {
    if (static_cast<int>(category_labels.size()) != categories)
      throw Error(ErrorCode::InvalidSchema, "variable '" + name + "' label count differs from G");
    std::set<std::string> uniq(category_labels.begin(), category_labels.end());
    if (uniq.size() != category_labels.size())
      throw Error(ErrorCode::InvalidSchema, "variable '" + name + "' has duplicate labels");
  }
}

int VariableSpec::code_of(const std::string& label) const {
  if (!category_labels.empty()) {
    auto it = std::find(category_labels.begin(), category_labels.end(), label);
    return it == category_labels.end() ? 0 : static_cast<int>(it - category_labels.begin()) + 1;
  }
  int code = 0;
  const char* b = label.data();
  const char* e = b + label.size();
  auto [ptr, ec] = std::from_chars(b, e, code);
  if (ec != std::errc() || ptr != e || code < 1 || code > categories) return 0;
  return code;
}

void Schema::validate() const {
  if (variables.empty()) throw Error(ErrorCode::InvalidSchema, "schema declares no variables");
  if (cluster_column.empty()) throw Error(ErrorCode::InvalidSchema, "cluster column name is empty");
  std::set<std::string> names;
  for (const auto& v : variables) {
    v.validate();
    if (v.name == cluster_column)
      throw Error(ErrorCode::InvalidSchema, "variable '" + v.name + "' collides with the cluster column");
    if (!names.insert(v.name).second) throw Error(ErrorCode::InvalidSchema, "duplicate variable '" + v.name + "'");
  }
}

std::size_t Schema::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < variables.size(); ++k)
    if (variables[k].name == name) return k;
  throw Error(ErrorCode::MissingColumn, "no variable named '" + name + "'");
}

std::vector<std::size_t> offsets_from_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> off(sizes.size() + 1, 0);
  for (std::size_t i = 0; i < sizes.size(); ++i) off[i + 1] = off[i] + sizes[i];
  return off;
}

ClusteredDataset::ClusteredDataset(std::vector<std::string> cluster_ids,
                                   std::vector<std::size_t> cluster_sizes,
                                   std::vector<VariableSpec> variables, Eigen::MatrixXd values,
                                   BoolMatrix mask, std::string cluster_column, std::string na_token)
    : cluster_ids_(std::move(cluster_ids)),
      cluster_sizes_(std::move(cluster_sizes)),
      offsets_(offsets_from_sizes(cluster_sizes_)),
      variables_(std::move(variables)),
      values_(std::move(values)),
      mask_(std::move(mask)),
      cluster_column_(std::move(cluster_column)),
      na_token_(std::move(na_token)) {
  for (Eigen::Index r = 0; r < values_.rows(); ++r)
    for (Eigen::Index k = 0; k < values_.cols(); ++k)
      if (mask_.rows() == values_.rows() && mask_.cols() == values_.cols() && mask_(r, k))
        values_(r, k) = kMissing;
  validate();
}

void ClusteredDataset::validate() const {
  if (cluster_ids_.size() != cluster_sizes_.size())
    throw Error(ErrorCode::DimensionMismatch, "cluster id and size lists differ in length");
  if (static_cast<std::size_t>(values_.cols()) != variables_.size())
    throw Error(ErrorCode::DimensionMismatch, "value matrix width differs from variable count");
  if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols())
    throw Error(ErrorCode::DimensionMismatch, "mask and values differ in shape");
  if (offsets_.back() != static_cast<std::size_t>(values_.rows()))
    throw Error(ErrorCode::DimensionMismatch, "cluster sizes do not sum to the row count");
  for (auto n : cluster_sizes_)
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "cluster sizes must be positive");
  for (std::size_t k = 0; k < variables_.size(); ++k) {
    variables_[k].validate();
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      if (mask_(r, k)) continue;
      const double v = values_(r, k);
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite observed cell");
      if (variables_[k].is_categorical() &&
          (v != std::round(v) || v < 1 || v > variables_[k].categories))
        throw Error(ErrorCode::InvalidArgument, "categorical cell outside 1..G in '" + variables_[k].name + "'");
    }
  }
}

std::size_t ClusteredDataset::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < variables_.size(); ++k)
    if (variables_[k].name == name) return k;
  throw Error(ErrorCode::MissingColumn, "no variable named '" + name + "'");
}

Schema ClusteredDataset::schema() const {
  Schema s;
  s.variables = variables_;
  s.cluster_column = cluster_column_;
  s.na_token = na_token_;
  return s;
}

void ClusteredDataset::set_value(std::size_t r, std::size_t k, double v) {
  values_(r, k) = v;
  mask_(r, k) = false;
}

void ClusteredDataset::set_missing(std::size_t r, std::size_t k) {
  values_(r, k) = kMissing;
  mask_(r, k) = true;
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.c_str();
  char* end = nullptr;
  out = std::strtod(b, &end);
  return end == b + s.size() && std::isfinite(out);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ClusteredDataset load_csv(const std::string& path, const std::vector<VariableSpec>& schema,
                          const std::string& cluster_column, const std::string& na_token) {
  Schema s{schema, cluster_column, na_token};
  s.validate();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyDataset, "'" + path + "' has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in '" + path + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cluster_col = column(cluster_column);
  std::vector<std::size_t> var_col;
  for (const auto& v : schema) var_col.push_back(column(v.name));

  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  std::vector<std::vector<std::vector<std::string>>> rows_by_cluster;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + " has " +
                                            std::to_string(cells.size()) + " fields, expected " +
                                            std::to_string(header.size()));
    const std::string id = trim(cells[cluster_col]);
    auto [it, fresh] = id_index.emplace(id, ids.size());
    if (fresh) {
      ids.push_back(id);
      rows_by_cluster.emplace_back();
    }
    rows_by_cluster[it->second].push_back(std::move(cells));
  }

  std::size_t N = 0;
  for (const auto& r : rows_by_cluster) N += r.size();
  if (N == 0) throw Error(ErrorCode::EmptyDataset, "'" + path + "' has no data rows");

  Eigen::MatrixXd values(N, schema.size());
  BoolMatrix mask = BoolMatrix::Constant(N, schema.size(), false);
  std::vector<std::size_t> sizes;
  std::size_t r = 0;
  for (const auto& block : rows_by_cluster) {
    sizes.push_back(block.size());
    for (const auto& cells : block) {
      for (std::size_t k = 0; k < schema.size(); ++k) {
        const std::string cell = trim(cells[var_col[k]]);
        if (cell == na_token) {
          mask(r, k) = true;
          values(r, k) = kMissing;
          continue;
        }
        if (schema[k].is_categorical()) {
          const int code = schema[k].code_of(cell);
          if (code == 0)
            throw Error(ErrorCode::UnknownCategoryLabel,
                        "'" + cell + "' is not a category of '" + schema[k].name + "'");
          values(r, k) = code;
        } else {
          double v;
          if (!parse_double(cell, v))
            throw Error(ErrorCode::NonNumericContinuousCell,
                        "'" + cell + "' in column '" + schema[k].name + "' is not a finite number");
          values(r, k) = v;
        }
      }
      ++r;
    }
  }
  return ClusteredDataset(std::move(ids), std::move(sizes), schema, std::move(values), std::move(mask),
                          cluster_column, na_token);
}

ClusteredDataset load_csv(const std::string& path, const Schema& schema) {
  return load_csv(path, schema.variables, schema.cluster_column, schema.na_token);
}

void write_csv(const ClusteredDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
  out << csv_field(data.cluster_column());
  for (const auto& v : data.variables()) out << ',' << csv_field(v.name);
  out << '\n';
  const auto& off = data.cluster_offsets();
  for (std::size_t i = 0; i < data.clusters(); ++i) {
    for (std::size_t r = off[i]; r < off[i + 1]; ++r) {
      out << csv_field(data.cluster_ids()[i]);
      for (std::size_t k = 0; k < data.cols(); ++k) {
        out << ',';
        if (data.missing(r, k)) {
          out << data.na_token();
          continue;
        }
        const auto& spec = data.variable(k);
        const double v = data.value(r, k);
        if (spec.is_categorical()) {
          const int code = static_cast<int>(v);
          out << (spec.category_labels.empty() ? std::to_string(code)
                                               : csv_field(spec.category_labels[code - 1]));
        } else {
          out << format_double(v);
        }
      }
      out << '\n';
    }
  }
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

double missing_ratio(const ClusteredDataset& data, std::size_t k) {
  if (k >= data.cols()) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
  if (data.rows() == 0) return 0.0;
  return static_cast<double>(data.mask().col(k).count()) / static_cast<double>(data.rows());
}

// ---------------------------------------------------------------- views

void Design::validate() const {
  if (Z.rows() != X.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Z row counts differ");
  if (cluster_offsets.empty() || cluster_offsets.front() != 0 ||
      cluster_offsets.back() != static_cast<std::size_t>(X.rows()))
    throw Error(ErrorCode::DimensionMismatch, "cluster offsets do not span the design rows");
  if (!std::is_sorted(cluster_offsets.begin(), cluster_offsets.end()))
    throw Error(ErrorCode::DimensionMismatch, "cluster offsets must be nondecreasing");
}

bool RegressionView::is_missing(std::size_t r) const {
  return std::binary_search(missing_rows.begin(), missing_rows.end(), r);
}

RegressionView make_view(Eigen::VectorXd y, Design design) {
  design.validate();
  if (y.size() != design.X.rows()) throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
  RegressionView view;
  for (Eigen::Index r = 0; r < y.size(); ++r)
    if (std::isnan(y(r))) view.missing_rows.push_back(static_cast<std::size_t>(r));
  view.y = std::move(y);
  view.design = std::move(design);
  return view;
}

RegressionView extract_regression_view(const ClusteredDataset& data, std::size_t response_k,
                                       const ViewOptions& options) {
  if (response_k >= data.cols()) throw Error(ErrorCode::InvalidArgument, "response index out of range");
  const std::size_t N = data.rows();
  std::vector<Eigen::VectorXd> cols;
  if (options.intercept) cols.push_back(Eigen::VectorXd::Ones(N));
  for (std::size_t k = 0; k < data.cols(); ++k) {
    if (k == response_k) continue;
    if (data.mask().col(k).any())
      throw Error(ErrorCode::UnfilledCovariate, "covariate '" + data.variable(k).name + "' still has missing cells");
    const auto& spec = data.variable(k);
    std::vector<Eigen::VectorXd> made;
    if (options.dummy_code && spec.is_categorical()) {
      for (int g = 2; g <= spec.categories; ++g)
        made.push_back((data.values().col(k).array() == g).cast<double>().matrix());
    } else {
      made.push_back(data.values().col(k));
    }
    for (auto& c : made) {
      if (options.standardize && N > 1) {
        const double mean = c.mean();
        const double sd = std::sqrt((c.array() - mean).square().sum() / static_cast<double>(N - 1));
        c.array() -= mean;
        if (sd > 0) c /= sd;
      }
      cols.push_back(std::move(c));
    }
  }
  Design d;
  d.X.resize(N, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) d.X.col(j) = cols[j];
  d.Z = Eigen::MatrixXd::Ones(N, 1);
  d.cluster_offsets = data.cluster_offsets();
  Eigen::VectorXd y = data.values().col(response_k);
  for (std::size_t r = 0; r < N; ++r)
    if (data.missing(r, response_k)) y(r) = kMissing;
  return make_view(std::move(y), std::move(d));
}

}  // namespace vbmi
