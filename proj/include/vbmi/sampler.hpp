#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "vbmi/data.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/vb.hpp"

namespace vbmi {

struct PosteriorDraw {
  double sigma_e2 = 1.0;
  Eigen::VectorXd beta;          // exact zeros where the spike fired
  std::vector<Eigen::VectorXd> b;  // one l-vector per cluster
};

PosteriorDraw draw_parameters(const VariationalState& state, RngStream& rng);

// Mean x^T beta + z^T b for every row of the design.
Eigen::VectorXd draw_mean(const PosteriorDraw& draw, const Design& design);

// One Gaussian draw per listed row, in list order.
Eigen::VectorXd draw_missing_continuous(const PosteriorDraw& draw, const Design& design,
                                        const std::vector<std::size_t>& rows, RngStream& rng);

// Two independent full-length latent vectors sharing the same mean and variance.
std::pair<Eigen::VectorXd, Eigen::VectorXd> draw_latent_pair(const PosteriorDraw& draw,
                                                             const Design& design,
                                                             RngStream& rng);

}  // namespace vbmi
