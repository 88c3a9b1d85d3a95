#include "vbmi/imputer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "vbmi/error.hpp"

namespace vbmi {

std::uint64_t copy_stream_id(int copy, std::size_t slot) {
  return (static_cast<std::uint64_t>(copy + 1) << 32) | static_cast<std::uint64_t>(slot);
}

ImputationPlan ImputationPlan::for_dataset(const ClusteredDataset& data, int M, std::uint64_t seed) {
  ImputationPlan plan;
  plan.variable_order = sort_variables(data);
  plan.M = M;
  plan.base_seed = seed;
  plan.fit_options.seed = seed;
  return plan;
}

void ImputationPlan::validate(const ClusteredDataset& data) const {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "M must be >= 1");
  if (sweeps < 1) throw Error(ErrorCode::InvalidArgument, "sweeps must be >= 1");
  std::vector<std::size_t> sorted = variable_order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(data.cols());
  std::iota(iota.begin(), iota.end(), 0);
  if (sorted != iota) throw Error(ErrorCode::InvalidArgument, "variable order is not a permutation of the columns");
  for (std::size_t r = 1; r < variable_order.size(); ++r)
    if (data.mask().col(variable_order[r - 1]).count() > data.mask().col(variable_order[r]).count())
      throw Error(ErrorCode::InvalidArgument, "variable order must follow nondecreasing missing ratio");
  fit_options.validate();
  hyper.validate(1);
}

std::vector<std::size_t> sort_variables(const ClusteredDataset& data) {
  std::vector<std::size_t> order(data.cols());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::Index> counts(data.cols());
  for (std::size_t k = 0; k < data.cols(); ++k) counts[k] = data.mask().col(k).count();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });
  return order;
}

ClusteredDataset initial_fill(const ClusteredDataset& data, RngStream& rng) {
  ClusteredDataset out = data;
  const auto& off = data.cluster_offsets();
  for (std::size_t k = 0; k < data.cols(); ++k) {
    if (!data.mask().col(k).any()) continue;
    std::vector<double> global;
    for (std::size_t r = 0; r < data.rows(); ++r)
      if (!data.missing(r, k)) global.push_back(data.value(r, k));
    if (global.empty())
      throw Error(ErrorCode::AllMissingColumn, "column '" + data.variable(k).name + "' has no observed values");
    for (std::size_t i = 0; i < data.clusters(); ++i) {
      std::vector<double> local;
      for (std::size_t r = off[i]; r < off[i + 1]; ++r)
        if (!data.missing(r, k)) local.push_back(data.value(r, k));
      const auto& pool = local.empty() ? global : local;
      for (std::size_t r = off[i]; r < off[i + 1]; ++r)
        if (data.missing(r, k)) out.set_value(r, k, pool[rng.below(pool.size())]);
    }
  }
  return out;
}

Cutoffs calibrate_cutoffs(const std::vector<int>& y_obs, const std::vector<double>& y_dup_obs, int G) {
  if (y_obs.empty()) throw Error(ErrorCode::EmptyObservedSet, "no observed cells to calibrate against");
  if (y_obs.size() != y_dup_obs.size())
    throw Error(ErrorCode::DimensionMismatch, "observed codes and duplicate draws differ in length");
  if (G < 2) throw Error(ErrorCode::InvalidArgument, "G must be >= 2");
  std::vector<std::size_t> count(static_cast<std::size_t>(G) + 1, 0);
  for (int y : y_obs) {
    if (y < 1 || y > G) throw Error(ErrorCode::InvalidArgument, "observed code outside 1..G");
    ++count[static_cast<std::size_t>(y)];
  }
  std::vector<double> sorted = y_dup_obs;
  std::sort(sorted.begin(), sorted.end());
  Cutoffs cut;
  cut.c.assign(static_cast<std::size_t>(G) + 1, 0.0);
  cut.c.front() = -std::numeric_limits<double>::infinity();
  cut.c.back() = std::numeric_limits<double>::infinity();
  std::size_t rank = 0;  // ceil(s_g * n) is the exact integer count of codes <= g
  for (int g = 1; g < G; ++g) {
    rank += count[static_cast<std::size_t>(g)];
    // Rank 0 (no observed code <= g) maps to the lowest finite double so that
    // the interval (c_0, c_g] stays empty for every finite latent value.
    cut.c[static_cast<std::size_t>(g)] = rank == 0 ? std::numeric_limits<double>::lowest() : sorted[rank - 1];
  }
  return cut;
}

int apply_cutoff(double value, const Cutoffs& cutoffs) {
  if (std::isnan(value)) throw Error(ErrorCode::NumericalFailure, "cannot discretize NaN");
  const auto it = std::lower_bound(cutoffs.c.begin() + 1, cutoffs.c.end(), value);
  return static_cast<int>(it - cutoffs.c.begin());
}

std::vector<int> apply_cutoffs(const std::vector<double>& values, const Cutoffs& cutoffs) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(apply_cutoff(v, cutoffs));
  return out;
}

Eigen::VectorXd impute_from_fit(const VariationalState& state, const RegressionView& view,
                                ResponseKind kind, int G, RngStream& rng) {
  const PosteriorDraw draw = draw_parameters(state, rng);
  const auto& rows = view.missing_rows;
  if (kind == ResponseKind::Continuous) return draw_missing_continuous(draw, view.design, rows, rng);

  const auto [yc, ydup] = draw_latent_pair(draw, view.design, rng);
  std::vector<int> obs;
  std::vector<double> dup;
  for (Eigen::Index r = 0; r < view.y.size(); ++r) {
    if (std::isnan(view.y(r))) continue;
    obs.push_back(static_cast<int>(view.y(r)));
    dup.push_back(ydup(r));
  }
  const Cutoffs cut = calibrate_cutoffs(obs, dup, G);
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    out(static_cast<Eigen::Index>(t)) = apply_cutoff(yc(static_cast<Eigen::Index>(rows[t])), cut);
  return out;
}

FitDiagnostics impute_variable(ClusteredDataset& working, std::size_t k, const std::vector<bool>& mask_k,
                               const ImputationPlan& plan, RngStream& rng) {
  if (mask_k.size() != working.rows()) throw Error(ErrorCode::DimensionMismatch, "mask length differs from rows");
  RegressionView view = extract_regression_view(working, k, plan.view_options);
  for (std::size_t r = 0; r < mask_k.size(); ++r)
    if (mask_k[r]) view.y(static_cast<Eigen::Index>(r)) = kMissing;
  view = make_view(std::move(view.y), std::move(view.design));

  FitOptions opts = plan.fit_options;
  opts.seed = rng();
  const FitResult res = fit(view, plan.hyper, opts);

  const auto& spec = working.variable(k);
  const auto kind = spec.is_categorical() ? ResponseKind::Categorical : ResponseKind::Continuous;
  const Eigen::VectorXd values = impute_from_fit(res.state, view, kind, spec.categories, rng);
  for (std::size_t t = 0; t < view.missing_rows.size(); ++t)
    working.set_value(view.missing_rows[t], k, values(static_cast<Eigen::Index>(t)));
  return res.diagnostics;
}

ImputationSet impute_dataset(const ClusteredDataset& data, const ImputationPlan& plan) {
  plan.validate(data);
  const int M = plan.M;
  const std::size_t d = data.cols();
  ImputationSet set;
  set.copies.resize(static_cast<std::size_t>(M));
  set.diagnostics.resize(static_cast<std::size_t>(M));
  set.variable_order = plan.variable_order;
  set.base_seed = plan.base_seed;
  set.source = data;
  for (int c = 0; c < M; ++c) set.stream_ids.push_back(copy_stream_id(c, 0));

  std::vector<std::vector<bool>> masks(d, std::vector<bool>(data.rows()));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t r = 0; r < data.rows(); ++r) masks[k][r] = data.missing(r, k);

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(M));
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < M; ++c) {
    try {
      RngStream fill_rng(plan.base_seed, copy_stream_id(c, 0));
      ClusteredDataset working = initial_fill(data, fill_rng);
      std::size_t slot = 1;
      for (int sweep = 0; sweep < plan.sweeps; ++sweep) {
        for (std::size_t k : plan.variable_order) {
          RngStream rng(plan.base_seed, copy_stream_id(c, slot++));
          set.diagnostics[static_cast<std::size_t>(c)].push_back(impute_variable(working, k, masks[k], plan, rng));
        }
      }
      set.copies[static_cast<std::size_t>(c)] = std::move(working);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return set;
}

}  // namespace vbmi
