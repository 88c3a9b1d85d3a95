#pragma once

#include <limits>
#include <string>
#include <vector>

#include "vbmi/data.hpp"

namespace vbmi {

struct PooledEstimate {
  double qbar = 0.0;
  double W = 0.0;
  double B = 0.0;
  double T = 0.0;
  double df = std::numeric_limits<double>::infinity();
  double ci_low = 0.0;
  double ci_high = 0.0;
  double fmi = 0.0;
  int M = 0;
};

struct PoolOptions {
  double level = 0.95;
  bool barnard_rubin = false;
  double complete_df = std::numeric_limits<double>::infinity();  // used by Barnard-Rubin only
};

PooledEstimate pool_scalar(const std::vector<double>& estimates, const std::vector<double>& variances,
                           const PoolOptions& options = {});

std::vector<PooledEstimate> pool_vector(const std::vector<std::vector<double>>& estimates,
                                        const std::vector<std::vector<double>>& variances,
                                        const PoolOptions& options = {});

struct ProportionRow {
  std::string label;
  PooledEstimate mi;  // percent scale
  double adhoc = 0.0, adhoc_low = 0.0, adhoc_high = 0.0;  // percent, observed cells only
  bool fmi_available = true;
};

struct ProportionTable {
  std::string variable;
  double missing_rate = 0.0;  // percent; NaN when the source mask is unknown
  std::vector<ProportionRow> rows;
};

// copies: completed datasets; source: the incomplete data (mask intact), or
// nullptr when unavailable, in which case the ad-hoc column mirrors copy 1.
ProportionTable proportion_table(const std::vector<ClusteredDataset>& copies,
                                 const ClusteredDataset* source, std::size_t k,
                                 const PoolOptions& options = {});

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd var;  // classical sigma^2 (X^T X)^{-1} diagonal
  double sigma2 = 0.0;
  int df = 0;
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct RegressionTable {
  std::string response;
  std::vector<std::string> terms;
  std::vector<PooledEstimate> estimates;
};

// Regress column k on an intercept plus every other column in each copy, then pool.
RegressionTable pooled_regression(const std::vector<ClusteredDataset>& copies, std::size_t k,
                                  const PoolOptions& options = {});

std::string format_table(const ProportionTable& table);
std::string format_table(const RegressionTable& table);
void write_table_csv(const ProportionTable& table, const std::string& path);
void write_table_csv(const RegressionTable& table, const std::string& path);

}  // namespace vbmi
