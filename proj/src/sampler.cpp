#include "vbmi/sampler.hpp"

#include <cmath>

#include "vbmi/error.hpp"
#include "vbmi/kernels.hpp"

namespace vbmi {

PosteriorDraw draw_parameters(const VariationalState& state, RngStream& rng) {
  PosteriorDraw d;
  d.sigma_e2 = rng.inverse_gamma(state.a_e, state.b_e);
  const auto p = state.theta.size();
  d.beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    // Both variates are always consumed so the stream layout does not depend on theta.
    const bool slab = rng.uniform() < state.theta(k);
    const double z = rng.normal();
    if (slab) d.beta(k) = state.mu_beta(k) + std::sqrt(state.sigma2_beta(k)) * z;
  }
  d.b.reserve(state.mu_b.size());
  for (std::size_t i = 0; i < state.mu_b.size(); ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(state.Psi_b[i]);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::CholeskyFailure, "random-effect covariance of cluster " + std::to_string(i));
    Eigen::VectorXd z(state.mu_b[i].size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    d.b.push_back(state.mu_b[i] + llt.matrixL() * z);
  }
  return d;
}

Eigen::VectorXd draw_mean(const PosteriorDraw& draw, const Design& design) {
  if (draw.beta.size() != design.X.cols() || draw.b.size() != design.clusters())
    throw Error(ErrorCode::DimensionMismatch, "draw does not match the design");
  Eigen::VectorXd mean = kernels::matvec(design.X, draw.beta);
  const auto& off = design.cluster_offsets;
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    const auto b = static_cast<Eigen::Index>(off[i]);
    const auto n = static_cast<Eigen::Index>(off[i + 1] - off[i]);
    if (n > 0) mean.segment(b, n) += design.Z.middleRows(b, n) * draw.b[i];
  }
  return mean;
}

Eigen::VectorXd draw_missing_continuous(const PosteriorDraw& draw, const Design& design,
                                        const std::vector<std::size_t>& rows, RngStream& rng) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  if (rows.empty()) return out;
  const Eigen::VectorXd mean = draw_mean(draw, design);
  const double sd = std::sqrt(draw.sigma_e2);
  for (std::size_t t = 0; t < rows.size(); ++t)
    out(static_cast<Eigen::Index>(t)) = mean(static_cast<Eigen::Index>(rows[t])) + sd * rng.normal();
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> draw_latent_pair(const PosteriorDraw& draw,
                                                             const Design& design, RngStream& rng) {
  const Eigen::VectorXd mean = draw_mean(draw, design);
  const double sd = std::sqrt(draw.sigma_e2);
  Eigen::VectorXd yc(mean.size()), ydup(mean.size());
  for (Eigen::Index r = 0; r < mean.size(); ++r) yc(r) = mean(r) + sd * rng.normal();
  for (Eigen::Index r = 0; r < mean.size(); ++r) ydup(r) = mean(r) + sd * rng.normal();
  return {std::move(yc), std::move(ydup)};
}

}  // namespace vbmi
