#pragma once

#include <cstdint>
#include <vector>

#include "vbmi/data.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/sampler.hpp"
#include "vbmi/vb.hpp"

namespace vbmi {

struct ImputationPlan {
  std::vector<std::size_t> variable_order;
  int M = 5;
  FitOptions fit_options;
  Hyperparameters hyper = Hyperparameters::defaults(1);
  std::uint64_t base_seed = 42;
  ViewOptions view_options;
  int sweeps = 1;

  static ImputationPlan for_dataset(const ClusteredDataset& data, int M, std::uint64_t seed);
  void validate(const ClusteredDataset& data) const;
};

struct Cutoffs {
  std::vector<double> c;  // c[0] = -inf, c[G] = +inf
  int G() const { return static_cast<int>(c.size()) - 1; }
};

struct ImputationSet {
  std::vector<ClusteredDataset> copies;
  // diagnostics[copy][r] for the r-th variable visited (per sweep, in plan order)
  std::vector<std::vector<FitDiagnostics>> diagnostics;
  std::vector<std::uint64_t> stream_ids;  // first stream id of each copy
  std::vector<std::size_t> variable_order;
  std::uint64_t base_seed = 0;
  ClusteredDataset source;  // the incomplete input, mask intact
};

std::vector<std::size_t> sort_variables(const ClusteredDataset& data);

// Within-cluster hot-deck with a global-pool fallback. The returned copy has
// every cell filled and the mask cleared; the caller keeps the original mask.
ClusteredDataset initial_fill(const ClusteredDataset& data, RngStream& rng);

Cutoffs calibrate_cutoffs(const std::vector<int>& y_obs, const std::vector<double>& y_dup_obs, int G);
int apply_cutoff(double value, const Cutoffs& cutoffs);
std::vector<int> apply_cutoffs(const std::vector<double>& values, const Cutoffs& cutoffs);

enum class ResponseKind { Continuous, Categorical };

// One posterior draw turned into values at view.missing_rows. Categorical
// responses are calibrated against the observed codes (1..G).
Eigen::VectorXd impute_from_fit(const VariationalState& state, const RegressionView& view,
                                   ResponseKind kind, int G, RngStream& rng);

FitDiagnostics impute_variable(ClusteredDataset& working, std::size_t k,
                               const std::vector<bool>& mask_k, const ImputationPlan& plan,
                               RngStream& rng);

ImputationSet impute_dataset(const ClusteredDataset& data, const ImputationPlan& plan);

// Stream id of the initial fill (slot 0) or of variable pass r (slot r+1) in a copy.
std::uint64_t copy_stream_id(int copy, std::size_t slot);

}  // namespace vbmi
