#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vbmi/data.hpp"

namespace vbmi {

struct Hyperparameters {
  double a_w = 1.0, b_w = 1.0;  // Beta prior on the inclusion probability
  double a1 = 1.0, b1 = 1.0;    // inverse-gamma prior on the error variance
  double nu = 3.0;              // Wishart degrees of freedom
  Eigen::MatrixXd V_inv = Eigen::MatrixXd::Identity(1, 1);

  static Hyperparameters defaults(std::size_t l);
  void validate(std::size_t l) const;
};

struct FitOptions {
  int max_iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 42;
  bool spike_enabled = true;
  // Debug switch: use the alternative slab-hyper and slab-variance forms
  // (extra (1-theta) term in b_s0, theta^2 weights for mu0, half prior precision).
  bool alt_forms = false;

  void validate() const;
};

struct VariationalState {
  Eigen::VectorXd mu_y, sigma2_y;  // one entry per missing row, aligned with missing_rows
  Eigen::VectorXd theta, mu_beta, sigma2_beta;
  std::vector<Eigen::VectorXd> mu_b;
  std::vector<Eigen::MatrixXd> Psi_b;
  double a_e = 1.0, b_e = 1.0;
  Eigen::MatrixXd Psi;
  double mu_mu0 = 0.0, sigma2_mu0 = 1.0;
  double a_s0 = 1.0, b_s0 = 1.0;
  double a_w = 1.0, b_w = 1.0;

  double tau_e() const { return a_e / b_e; }
  double tau_0() const { return a_s0 / b_s0; }
  Eigen::VectorXd beta_mean() const { return theta.cwiseProduct(mu_beta); }

  // Flattened scalars in a fixed order; used by the convergence metric.
  std::vector<double> flatten() const;
  bool all_finite() const;
  void check_invariants() const;
};

struct DesignCache {
  Eigen::MatrixXd D1;           // sum x x^T
  Eigen::VectorXd xsq_colsums;  // diagonal of D2

  static DesignCache build(const Design& design);
};

struct FitDiagnostics {
  int iterations_run = 0;
  bool converged = false;
  double final_change = 0.0;
  std::vector<double> trace;
};

// Observed value or variational mean per row, and the matching second moment.
struct ResponseMoments {
  Eigen::VectorXd y_hat;
  Eigen::VectorXd y_sq;
};

ResponseMoments response_moments(const VariationalState& s, const RegressionView& view);

// Per-row z_ij^T mu_b for the owning cluster.
Eigen::VectorXd random_effect_means(const VariationalState& s, const Design& design);

VariationalState init_state(const RegressionView& view, const Hyperparameters& hyper,
                            const FitOptions& options);

// Coordinate updates, applied in place with the freshest values.
void update_psi_hat(VariationalState& s, const Hyperparameters& hyper, std::size_t m);
void update_missing_y(VariationalState& s, const RegressionView& view);
void update_beta_block(VariationalState& s, const RegressionView& view, const DesignCache& cache,
                       const FitOptions& options);
void update_random_effects(VariationalState& s, const RegressionView& view);
double compute_ssr(const VariationalState& s, const RegressionView& view);
void update_error_variance(VariationalState& s, const Hyperparameters& hyper, std::size_t N,
                           double ssr);
void update_slab_hyper(VariationalState& s, const Hyperparameters& hyper,
                       const FitOptions& options);

double convergence_metric(const VariationalState& prev, const VariationalState& next);

struct FitResult {
  VariationalState state;
  FitDiagnostics diagnostics;
};

FitResult fit(const RegressionView& view, const Hyperparameters& hyper, const FitOptions& options);

}  // namespace vbmi
