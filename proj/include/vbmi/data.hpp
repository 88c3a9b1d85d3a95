#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace vbmi {

enum class VariableKind { Continuous, Categorical };

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::Continuous;
  int categories = 0;                       // G, only for categorical
  std::vector<std::string> category_labels;  // empty or exactly G labels

  static VariableSpec continuous(std::string name);
  static VariableSpec categorical(std::string name, int G, std::vector<std::string> labels = {});

  bool is_categorical() const { return kind == VariableKind::Categorical; }
  void validate() const;
  // 1-based code of a label, or 0 when unknown.
  int code_of(const std::string& label) const;
};

struct Schema {
  std::vector<VariableSpec> variables;
  std::string cluster_column = "cluster";
  std::string na_token = "NA";

  void validate() const;
  std::size_t index_of(const std::string& name) const;
};

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Long-format clustered data; rows are contiguous per cluster.
class ClusteredDataset {
 public:
  ClusteredDataset() = default;
  ClusteredDataset(std::vector<std::string> cluster_ids, std::vector<std::size_t> cluster_sizes,
                   std::vector<VariableSpec> variables, Eigen::MatrixXd values, BoolMatrix mask,
                   std::string cluster_column = "cluster", std::string na_token = "NA");

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return variables_.size(); }
  std::size_t clusters() const { return cluster_ids_.size(); }

  const std::vector<std::string>& cluster_ids() const { return cluster_ids_; }
  const std::vector<std::size_t>& cluster_sizes() const { return cluster_sizes_; }
  // m + 1 offsets; rows of cluster i are [offset[i], offset[i+1]).
  const std::vector<std::size_t>& cluster_offsets() const { return offsets_; }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  const VariableSpec& variable(std::size_t k) const { return variables_.at(k); }
  std::size_t index_of(const std::string& name) const;

  const Eigen::MatrixXd& values() const { return values_; }
  const BoolMatrix& mask() const { return mask_; }
  bool missing(std::size_t r, std::size_t k) const { return mask_(r, k); }
  double value(std::size_t r, std::size_t k) const { return values_(r, k); }
  std::size_t missing_count() const { return static_cast<std::size_t>(mask_.count()); }

  const std::string& cluster_column() const { return cluster_column_; }
  const std::string& na_token() const { return na_token_; }
  Schema schema() const;

  // Mutation is only meant for private working copies.
  void set_value(std::size_t r, std::size_t k, double v);
  void set_missing(std::size_t r, std::size_t k);
  void clear_mask() { mask_.setConstant(false); }

  void validate() const;

 private:
  std::vector<std::string> cluster_ids_;
  std::vector<std::size_t> cluster_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<VariableSpec> variables_;
  Eigen::MatrixXd values_;
  BoolMatrix mask_;
  std::string cluster_column_ = "cluster";
  std::string na_token_ = "NA";
};

ClusteredDataset load_csv(const std::string& path, const std::vector<VariableSpec>& schema,
                          const std::string& cluster_column, const std::string& na_token = "NA");
ClusteredDataset load_csv(const std::string& path, const Schema& schema);
void write_csv(const ClusteredDataset& data, const std::string& path);

double missing_ratio(const ClusteredDataset& data, std::size_t k);

// Regression design shared by the engine, the sampler and the simulation harness.
struct Design {
  Eigen::MatrixXd X;                        // N x p
  Eigen::MatrixXd Z;                        // N x l
  std::vector<std::size_t> cluster_offsets;  // m + 1

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t l() const { return static_cast<std::size_t>(Z.cols()); }
  std::size_t clusters() const { return cluster_offsets.empty() ? 0 : cluster_offsets.size() - 1; }
  void validate() const;
};

struct RegressionView {
  Eigen::VectorXd y;                      // NaN at missing rows
  std::vector<std::size_t> missing_rows;  // I_mis, ascending
  Design design;

  std::size_t observed_count() const { return static_cast<std::size_t>(y.size()) - missing_rows.size(); }
  bool is_missing(std::size_t r) const;
};

struct ViewOptions {
  bool intercept = true;
  bool standardize = false;  // center and scale non-intercept columns
  bool dummy_code = false;   // expand categorical covariates to G-1 indicators
};

// Covariates = all columns except response_k, random intercept design.
RegressionView extract_regression_view(const ClusteredDataset& data, std::size_t response_k,
                                       const ViewOptions& options = {});

// Builds a view from a response vector with NaN marking missing cells.
RegressionView make_view(Eigen::VectorXd y, Design design);

std::vector<std::size_t> offsets_from_sizes(const std::vector<std::size_t>& sizes);

// 17 significant digits, enough for an exact round trip.
std::string format_double(double v);

}  // namespace vbmi
