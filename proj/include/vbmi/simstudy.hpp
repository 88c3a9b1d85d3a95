#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vbmi/data.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/vb.hpp"

namespace vbmi {

enum class Scenario { Continuous, Binary, Multinomial };

Scenario parse_scenario(const std::string& name);
std::string to_string(Scenario s);

struct SimConfig {
  int m = 30, n = 15, p = 40, l = 3;
  Scenario scenario = Scenario::Continuous;
  int K = 5;  // classes for the multinomial scenario
  int replicates = 200;
  int M = 5;
  double miss_target = 0.27;
  double beta_mis = 0.3;
  double sigma_e = 1.0;
  std::uint64_t master_seed = 42;
  bool compare_dense = true;      // also fit the spike-disabled baseline
  bool rounding_baseline = true;  // categorical scenarios only
  FitOptions fit;

  static SimConfig full_scale(Scenario s);
  void validate() const;
  int N() const { return m * n; }
};

// Optional overrides used by tests to pin parts of the generative model.
struct GeneratorOverrides {
  std::optional<Eigen::VectorXd> beta;
  std::optional<std::vector<Eigen::VectorXd>> class_betas;  // multinomial
  bool zero_random_effects = false;
};

struct SimData {
  Eigen::MatrixXd X;  // N x p, no intercept
  Eigen::MatrixXd Z;  // N x l
  std::vector<std::size_t> cluster_offsets;
  Eigen::VectorXd y;  // complete response (codes 1..G for categorical scenarios)
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> class_betas;  // multinomial only
  std::vector<Eigen::VectorXd> b;
  Eigen::MatrixXd Psi;

  ClusteredDataset to_dataset(Scenario scenario, int K) const;
};

Eigen::VectorXd three_peak_beta(int p);

SimData gen_continuous(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov = {});
SimData gen_binary(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov = {});
SimData gen_multinomial(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov = {});
SimData generate(const SimConfig& config, RngStream& rng);

// Class probabilities for one cell given per-class linear predictors.
Eigen::VectorXd softmax(const Eigen::VectorXd& eta);

// Normalized sparse coefficients: first min(10, p) entries from N(0, 0.1^2), unit norm.
Eigen::VectorXd sparse_unit_beta(int p, RngStream& rng);

struct MarMask {
  std::vector<bool> missing;
  double alpha_R = 0.0;
  double expected_rate = 0.0;
  double achieved_rate = 0.0;
};

double calibrate_alpha(const Eigen::VectorXd& x1, double beta_mis, double target);
MarMask gen_mar_mask(const Eigen::VectorXd& x1, const SimConfig& config, RngStream& rng);

struct SecondLayer {
  Eigen::VectorXd u;
  Eigen::VectorXd theta;  // (theta0, theta1) or the n-vector theta
};

struct SecondLayerOverrides {
  std::optional<Eigen::VectorXd> theta;
  bool zero_noise = false;
};

SecondLayer gen_second_layer(const Eigen::VectorXd& complete_y, const std::vector<std::size_t>& offsets,
                             Scenario scenario, RngStream& rng, const SecondLayerOverrides& ov = {});

// Reshape a response to the m x n matrix (row = cluster) used by the categorical
// second layer; binary codes become 0/1, multinomial codes stay 1..K.
Eigen::MatrixXd response_matrix(const Eigen::VectorXd& y, const std::vector<std::size_t>& offsets,
                                Scenario scenario);

struct ErrorNorms {
  double l2 = 0.0, l1 = 0.0, linf = 0.0;
};

ErrorNorms error_norms(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

struct CoefficientResult {
  double estimate = 0.0, ci_low = 0.0, ci_high = 0.0, truth = 0.0;
  bool covered = false;
  double width() const { return ci_high - ci_low; }
};

struct ReplicateResult {
  int replicate = 0;
  bool ok = false;
  std::string error;
  double alpha_R = 0.0;
  double achieved_missing = 0.0;
  ErrorNorms beta_sparse, beta_dense;
  bool fit_converged = true;
  std::vector<CoefficientResult> beta_ci;       // continuous: per-coefficient pooled CIs
  std::vector<CoefficientResult> theta_ci;      // second layer, VBMI
  std::vector<CoefficientResult> theta_round;   // second layer, rounding baseline
  ErrorNorms theta_err, theta_round_err;
  double wall_seconds = 0.0;
};

struct SimReport {
  SimConfig config;
  Eigen::VectorXd beta_truth;  // continuous scenario truth (empty otherwise)
  std::vector<ReplicateResult> replicates;

  int failures() const;
  // Coverage rate of coefficient j across successful replicates.
  double beta_coverage(std::size_t j) const;
  double theta_coverage(std::size_t j, bool rounding = false) const;
  double sparse_win_rate() const;  // fraction with sparse l2 <= dense l2
  std::string summary_json() const;
  void write_csv(const std::string& path, bool include_timing = false) const;
};

ReplicateResult run_replicate(const SimConfig& config, int r);
SimReport run_study(const SimConfig& config);

}  // namespace vbmi
