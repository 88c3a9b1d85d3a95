#include "vbmi/simstudy.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vbmi/error.hpp"
#include "vbmi/imputer.hpp"
#include "vbmi/pooling.hpp"
#include "vbmi/sampler.hpp"
#include "vbmi/special.hpp"

namespace vbmi {

Scenario parse_scenario(const std::string& name) {
  if (name == "continuous") return Scenario::Continuous;
  if (name == "binary") return Scenario::Binary;
  if (name == "multinomial") return Scenario::Multinomial;
  throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Continuous: return "continuous";
    case Scenario::Binary: return "binary";
    case Scenario::Multinomial: return "multinomial";
  }
  return "continuous";
}

SimConfig SimConfig::full_scale(Scenario s) {
  SimConfig c;
  c.scenario = s;
  c.m = 50;
  c.n = 20;
  c.p = 100;
  c.replicates = 1000;
  return c;
}

void SimConfig::validate() const {
  if (m < 1 || n < 1 || p < 1 || l < 1) throw Error(ErrorCode::InvalidArgument, "sizes must be positive");
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be positive");
  if (M < 2) throw Error(ErrorCode::TooFewImputations, "M must be >= 2 for pooling");
  if (!(miss_target > 0 && miss_target < 1)) throw Error(ErrorCode::InvalidArgument, "miss_target must be in (0,1)");
  if (!(sigma_e > 0)) throw Error(ErrorCode::InvalidArgument, "sigma_e must be positive");
  if (scenario == Scenario::Multinomial && K < 2) throw Error(ErrorCode::InvalidArgument, "K must be >= 2");
  if (scenario != Scenario::Continuous && n > m)
    throw Error(ErrorCode::InvalidArgument, "the categorical second layer needs n <= m");
  fit.validate();
}

Eigen::VectorXd three_peak_beta(int p) {
  Eigen::VectorXd beta(p);
  for (int k = 1; k <= p; ++k) {
    const double x = static_cast<double>(k) / p;
    if (x <= 0.0 || x >= 1.0) {
      beta(k - 1) = 0.0;
      continue;
    }
    beta(k - 1) = 0.7 / 20 * std::exp(log_beta_pdf(x, 1500, 3000)) +
                  0.5 / 20 * std::exp(log_beta_pdf(x, 1200, 900)) +
                  0.5 / 20 * std::exp(log_beta_pdf(x, 600, 160));
  }
  return beta;
}

Eigen::VectorXd sparse_unit_beta(int p, RngStream& rng) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const int q = std::min(10, p);
  for (int k = 0; k < q; ++k) beta(k) = 0.1 * rng.normal();
  return beta / beta.norm();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& eta) {
  const Eigen::ArrayXd e = (eta.array() - eta.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

namespace {

// Shared covariates and random effects for every generator.
SimData gen_common(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov) {
  const int N = config.N();
  SimData d;
  d.X.resize(N, config.p);
  for (int r = 0; r < N; ++r)
    for (int k = 0; k < config.p; ++k) d.X(r, k) = 3.0 * rng.normal();
  d.Z.resize(N, config.l);
  for (int r = 0; r < N; ++r)
    for (int j = 0; j < config.l; ++j) d.Z(r, j) = rng.normal();
  d.cluster_offsets = offsets_from_sizes(std::vector<std::size_t>(config.m, static_cast<std::size_t>(config.n)));
  d.Psi = Eigen::MatrixXd::Identity(config.l, config.l);
  d.b.assign(config.m, Eigen::VectorXd::Zero(config.l));
  for (auto& b : d.b)
    for (int j = 0; j < config.l; ++j) b(j) = ov.zero_random_effects ? 0.0 : rng.normal();
  return d;
}

Eigen::VectorXd random_part(const SimData& d) {
  Eigen::VectorXd out(d.X.rows());
  for (std::size_t i = 0; i + 1 < d.cluster_offsets.size(); ++i)
    for (auto r = d.cluster_offsets[i]; r < d.cluster_offsets[i + 1]; ++r)
      out(static_cast<Eigen::Index>(r)) = d.Z.row(static_cast<Eigen::Index>(r)).dot(d.b[i]);
  return out;
}

}  // namespace

SimData gen_continuous(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov) {
  SimData d = gen_common(config, rng, ov);
  d.beta = ov.beta ? *ov.beta : three_peak_beta(config.p);
  if (d.beta.size() != config.p) throw Error(ErrorCode::DimensionMismatch, "beta override has wrong length");
  d.y = d.X * d.beta + random_part(d);
  for (Eigen::Index r = 0; r < d.y.size(); ++r) d.y(r) += config.sigma_e * rng.normal();
  return d;
}

SimData gen_binary(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov) {
  SimData d = gen_common(config, rng, ov);
  d.beta = ov.beta ? *ov.beta : sparse_unit_beta(config.p, rng);
  if (d.beta.size() != config.p) throw Error(ErrorCode::DimensionMismatch, "beta override has wrong length");
  const Eigen::VectorXd eta = d.X * d.beta + random_part(d);
  d.y.resize(eta.size());
  for (Eigen::Index r = 0; r < eta.size(); ++r) d.y(r) = rng.bernoulli(inv_logit(eta(r))) ? 2.0 : 1.0;
  return d;
}

SimData gen_multinomial(const SimConfig& config, RngStream& rng, const GeneratorOverrides& ov) {
  SimData d = gen_common(config, rng, ov);
  const int K = config.K;
  if (ov.class_betas) {
    d.class_betas = *ov.class_betas;
  } else {
    for (int s = 0; s < K; ++s) d.class_betas.push_back(sparse_unit_beta(config.p, rng));
  }
  if (static_cast<int>(d.class_betas.size()) != K)
    throw Error(ErrorCode::DimensionMismatch, "class beta override must hold K vectors");
  const Eigen::VectorXd zb = random_part(d);
  Eigen::MatrixXd eta(d.X.rows(), K);
  for (int s = 0; s < K; ++s) eta.col(s) = d.X * d.class_betas[s] + zb;
  d.y.resize(eta.rows());
  for (Eigen::Index r = 0; r < eta.rows(); ++r) {
    const Eigen::VectorXd prob = softmax(eta.row(r).transpose());
    const double u = rng.uniform();
    double acc = 0.0;
    int cls = K;
    for (int s = 0; s < K; ++s) {
      acc += prob(s);
      if (u < acc) {
        cls = s + 1;
        break;
      }
    }
    d.y(r) = cls;
  }
  return d;
}

SimData generate(const SimConfig& config, RngStream& rng) {
  switch (config.scenario) {
    case Scenario::Continuous: return gen_continuous(config, rng);
    case Scenario::Binary: return gen_binary(config, rng);
    case Scenario::Multinomial: return gen_multinomial(config, rng);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scenario");
}

ClusteredDataset SimData::to_dataset(Scenario scenario, int K) const {
  const auto N = X.rows();
  const auto p = X.cols(), l = Z.cols();
  std::vector<VariableSpec> vars;
  if (scenario == Scenario::Continuous) vars.push_back(VariableSpec::continuous("y"));
  else if (scenario == Scenario::Binary) vars.push_back(VariableSpec::categorical("y", 2, {"0", "1"}));
  else vars.push_back(VariableSpec::categorical("y", K));
  for (Eigen::Index k = 0; k < p; ++k) vars.push_back(VariableSpec::continuous("x" + std::to_string(k + 1)));
  for (Eigen::Index j = 0; j < l; ++j) vars.push_back(VariableSpec::continuous("z" + std::to_string(j + 1)));
  Eigen::MatrixXd values(N, 1 + p + l);
  values.col(0) = y;
  values.middleCols(1, p) = X;
  values.middleCols(1 + p, l) = Z;
  std::vector<std::string> ids;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i + 1 < cluster_offsets.size(); ++i) {
    ids.push_back("c" + std::to_string(i + 1));
    sizes.push_back(cluster_offsets[i + 1] - cluster_offsets[i]);
  }
  BoolMatrix mask = BoolMatrix::Constant(N, 1 + p + l, false);
  for (Eigen::Index r = 0; r < N; ++r) mask(r, 0) = std::isnan(y(r));
  return ClusteredDataset(ids, sizes, vars, values, mask);
}

double calibrate_alpha(const Eigen::VectorXd& x1, double beta_mis, double target) {
  if (beta_mis == 0.0) return logit(target);
  auto rate = [&](double a) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < x1.size(); ++r) s += inv_logit(a + beta_mis * x1(r));
    return s / static_cast<double>(x1.size());
  };
  double lo = -20.0, hi = 20.0;
  if (rate(lo) > target || rate(hi) < target)
    throw Error(ErrorCode::CalibrationFailure, "missing-rate target not bracketed on [-20, 20]");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < target ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  if (std::abs(rate(a) - target) > 0.002) throw Error(ErrorCode::CalibrationFailure, "bisection missed the target");
  return a;
}

MarMask gen_mar_mask(const Eigen::VectorXd& x1, const SimConfig& config, RngStream& rng) {
  MarMask out;
  out.alpha_R = calibrate_alpha(x1, config.beta_mis, config.miss_target);
  out.missing.resize(static_cast<std::size_t>(x1.size()));
  std::size_t count = 0;
  double expected = 0.0;
  for (Eigen::Index r = 0; r < x1.size(); ++r) {
    const double p = inv_logit(out.alpha_R + config.beta_mis * x1(r));
    expected += p;
    out.missing[static_cast<std::size_t>(r)] = rng.bernoulli(p);
    count += out.missing[static_cast<std::size_t>(r)];
  }
  out.expected_rate = expected / static_cast<double>(x1.size());
  out.achieved_rate = static_cast<double>(count) / static_cast<double>(x1.size());
  return out;
}

Eigen::MatrixXd response_matrix(const Eigen::VectorXd& y, const std::vector<std::size_t>& offsets, Scenario scenario) {
  const std::size_t m = offsets.size() - 1;
  const std::size_t n = m > 0 ? offsets[1] - offsets[0] : 0;
  for (std::size_t i = 0; i < m; ++i)
    if (offsets[i + 1] - offsets[i] != n) throw Error(ErrorCode::DimensionMismatch, "clusters must be balanced");
  if (static_cast<std::size_t>(y.size()) != m * n) throw Error(ErrorCode::DimensionMismatch, "response length mismatch");
  Eigen::MatrixXd Y(m, n);
  const double shift = scenario == Scenario::Binary ? 1.0 : 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y(i, j) = y(static_cast<Eigen::Index>(offsets[i] + j)) - shift;
  return Y;
}

SecondLayer gen_second_layer(const Eigen::VectorXd& complete_y, const std::vector<std::size_t>& offsets,
                             Scenario scenario, RngStream& rng, const SecondLayerOverrides& ov) {
  if (offsets.empty() || offsets.back() != static_cast<std::size_t>(complete_y.size()))
    throw Error(ErrorCode::DimensionMismatch, "cluster offsets do not match the response");
  SecondLayer out;
  if (scenario == Scenario::Continuous) {
    out.theta = ov.theta ? *ov.theta : Eigen::VectorXd(Eigen::Vector2d(-2.0, 4.0));
    if (out.theta.size() != 2) throw Error(ErrorCode::DimensionMismatch, "continuous theta has two entries");
    out.u.resize(complete_y.size());
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
      const double v = ov.zero_noise ? 0.0 : rng.normal();
      for (auto r = offsets[i]; r < offsets[i + 1]; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        const double e = ov.zero_noise ? 0.0 : 0.3 * rng.normal();
        out.u(ri) = out.theta(0) + out.theta(1) * complete_y(ri) + v + e;
      }
    }
    return out;
  }
  const Eigen::MatrixXd Y = response_matrix(complete_y, offsets, scenario);
  if (ov.theta) {
    out.theta = *ov.theta;
    if (out.theta.size() != Y.cols()) throw Error(ErrorCode::DimensionMismatch, "theta must have n entries");
  } else {
    out.theta.resize(Y.cols());
    for (Eigen::Index j = 0; j < Y.cols(); ++j) out.theta(j) = 5.0 * rng.normal();
  }
  out.u = Y * out.theta;
  if (!ov.zero_noise)
    for (Eigen::Index i = 0; i < out.u.size(); ++i) out.u(i) += 5.0 * rng.normal();
  return out;
}

ErrorNorms error_norms(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) throw Error(ErrorCode::DimensionMismatch, "vectors differ in length");
  const Eigen::VectorXd d = estimate - truth;
  if (d.size() == 0) return {};
  return {d.norm(), d.lpNorm<1>(), d.lpNorm<Eigen::Infinity>()};
}

// ------------------------------------------------------------------ study

namespace {

enum Stream : std::uint64_t { kGen = 1, kMask = 2, kSecond = 3, kImpute = 16, kRound = 1024 };

std::uint64_t replicate_stream(int r, std::uint64_t purpose) {
  return (static_cast<std::uint64_t>(r + 1) << 20) | purpose;
}

std::vector<CoefficientResult> to_results(const std::vector<PooledEstimate>& pooled, const Eigen::VectorXd& truth) {
  std::vector<CoefficientResult> out;
  for (std::size_t j = 0; j < pooled.size(); ++j) {
    CoefficientResult c;
    c.estimate = pooled[j].qbar;
    c.ci_low = pooled[j].ci_low;
    c.ci_high = pooled[j].ci_high;
    c.truth = truth(static_cast<Eigen::Index>(j));
    c.covered = c.ci_low <= c.truth && c.truth <= c.ci_high;
    out.push_back(c);
  }
  return out;
}

Eigen::VectorXd estimates_of(const std::vector<CoefficientResult>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) out(static_cast<Eigen::Index>(j)) = v[j].estimate;
  return out;
}

struct PerCopy {
  std::vector<std::vector<double>> est, var;
  void add(const OlsFit& f, Eigen::Index from = 0) {
    est.emplace_back(f.coef.data() + from, f.coef.data() + f.coef.size());
    var.emplace_back(f.var.data() + from, f.var.data() + f.var.size());
  }
};

}  // namespace

ReplicateResult run_replicate(const SimConfig& config, int r) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicateResult res;
  res.replicate = r;
  const std::uint64_t seed = config.master_seed;

  RngStream gen_rng(seed, replicate_stream(r, kGen));
  const SimData data = generate(config, gen_rng);
  RngStream mask_rng(seed, replicate_stream(r, kMask));
  const MarMask mask = gen_mar_mask(data.X.col(0), config, mask_rng);
  res.alpha_R = mask.alpha_R;
  res.achieved_missing = mask.achieved_rate;
  RngStream sl_rng(seed, replicate_stream(r, kSecond));
  const SecondLayer sl = gen_second_layer(data.y, data.cluster_offsets, config.scenario, sl_rng);

  const Eigen::Index N = data.X.rows(), p = data.X.cols();
  Design design;
  design.X.resize(N, p + 1);
  design.X.col(0).setOnes();
  design.X.rightCols(p) = data.X;
  design.Z = data.Z;
  design.cluster_offsets = data.cluster_offsets;
  Eigen::VectorXd y_obs = data.y;
  for (Eigen::Index i = 0; i < N; ++i)
    if (mask.missing[static_cast<std::size_t>(i)]) y_obs(i) = kMissing;
  const RegressionView view = make_view(y_obs, design);

  const Hyperparameters hyper = Hyperparameters::defaults(static_cast<std::size_t>(config.l));
  FitOptions fo = config.fit;
  fo.seed = mix64(seed ^ mix64(static_cast<std::uint64_t>(r)));
  fo.spike_enabled = true;
  const FitResult sparse = fit(view, hyper, fo);
  res.fit_converged = sparse.diagnostics.converged;

  auto completed = [&](const Eigen::VectorXd& vals) {
    Eigen::VectorXd y = y_obs;
    for (std::size_t t = 0; t < view.missing_rows.size(); ++t)
      y(static_cast<Eigen::Index>(view.missing_rows[t])) = vals(static_cast<Eigen::Index>(t));
    return y;
  };

  if (config.scenario == Scenario::Continuous) {
    res.beta_sparse = error_norms(sparse.state.beta_mean().tail(p), data.beta);
    if (config.compare_dense) {
      FitOptions dense_opts = fo;
      dense_opts.spike_enabled = false;
      const FitResult dense = fit(view, hyper, dense_opts);
      res.beta_dense = error_norms(dense.state.beta_mean().tail(p), data.beta);
    }
    PerCopy beta_pc, theta_pc;
    Eigen::MatrixXd U(N, 2);
    U.col(0).setOnes();
    for (int c = 0; c < config.M; ++c) {
      RngStream rng(seed, replicate_stream(r, kImpute + static_cast<std::uint64_t>(c)));
      const Eigen::VectorXd y = completed(impute_from_fit(sparse.state, view, ResponseKind::Continuous, 0, rng));
      beta_pc.add(ols(design.X, y), 1);
      U.col(1) = y;
      theta_pc.add(ols(U, sl.u));
    }
    res.beta_ci = to_results(pool_vector(beta_pc.est, beta_pc.var), data.beta);
    res.theta_ci = to_results(pool_vector(theta_pc.est, theta_pc.var), sl.theta);
    res.theta_err = error_norms(estimates_of(res.theta_ci), sl.theta);
  } else {
    const int G = config.scenario == Scenario::Binary ? 2 : config.K;
    PerCopy vb_pc, round_pc;
    for (int c = 0; c < config.M; ++c) {
      RngStream rng(seed, replicate_stream(r, kImpute + static_cast<std::uint64_t>(c)));
      const Eigen::VectorXd y = completed(impute_from_fit(sparse.state, view, ResponseKind::Categorical, G, rng));
      vb_pc.add(ols(response_matrix(y, data.cluster_offsets, config.scenario), sl.u));
      if (config.rounding_baseline) {
        RngStream rr(seed, replicate_stream(r, kRound + static_cast<std::uint64_t>(c)));
        Eigen::VectorXd vals = impute_from_fit(sparse.state, view, ResponseKind::Continuous, 0, rr);
        for (Eigen::Index t = 0; t < vals.size(); ++t) vals(t) = std::clamp(std::round(vals(t)), 1.0, double(G));
        round_pc.add(ols(response_matrix(completed(vals), data.cluster_offsets, config.scenario), sl.u));
      }
    }
    res.theta_ci = to_results(pool_vector(vb_pc.est, vb_pc.var), sl.theta);
    res.theta_err = error_norms(estimates_of(res.theta_ci), sl.theta);
    if (config.rounding_baseline) {
      res.theta_round = to_results(pool_vector(round_pc.est, round_pc.var), sl.theta);
      res.theta_round_err = error_norms(estimates_of(res.theta_round), sl.theta);
    }
  }
  res.ok = true;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SimReport run_study(const SimConfig& config) {
  config.validate();
  SimReport report;
  report.config = config;
  if (config.scenario == Scenario::Continuous) report.beta_truth = three_peak_beta(config.p);
  report.replicates.resize(static_cast<std::size_t>(config.replicates));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < config.replicates; ++r) {
    auto& slot = report.replicates[static_cast<std::size_t>(r)];
    try {
      slot = run_replicate(config, r);
    } catch (const std::exception& e) {
      slot = ReplicateResult{};
      slot.replicate = r;
      slot.ok = false;
      slot.error = e.what();
    }
  }
  return report;
}

int SimReport::failures() const {
  return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](const auto& r) { return !r.ok; }));
}

namespace {

double coverage_of(const std::vector<ReplicateResult>& reps, std::size_t j,
                   const std::vector<CoefficientResult> ReplicateResult::*field) {
  double hit = 0.0, total = 0.0;
  for (const auto& r : reps) {
    if (!r.ok || j >= (r.*field).size()) continue;
    total += 1.0;
    hit += (r.*field)[j].covered ? 1.0 : 0.0;
  }
  return total > 0 ? hit / total : std::numeric_limits<double>::quiet_NaN();
}

double mean_width(const std::vector<ReplicateResult>& reps, std::size_t j,
                  const std::vector<CoefficientResult> ReplicateResult::*field) {
  double s = 0.0, total = 0.0;
  for (const auto& r : reps) {
    if (!r.ok || j >= (r.*field).size()) continue;
    total += 1.0;
    s += (r.*field)[j].width();
  }
  return total > 0 ? s / total : std::numeric_limits<double>::quiet_NaN();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

double SimReport::beta_coverage(std::size_t j) const { return coverage_of(replicates, j, &ReplicateResult::beta_ci); }

double SimReport::theta_coverage(std::size_t j, bool rounding) const {
  return coverage_of(replicates, j, rounding ? &ReplicateResult::theta_round : &ReplicateResult::theta_ci);
}

double SimReport::sparse_win_rate() const {
  double win = 0.0, total = 0.0;
  for (const auto& r : replicates) {
    if (!r.ok) continue;
    total += 1.0;
    win += r.beta_sparse.l2 <= r.beta_dense.l2 ? 1.0 : 0.0;
  }
  return total > 0 ? win / total : std::numeric_limits<double>::quiet_NaN();
}

std::string SimReport::summary_json() const {
  using nlohmann::json;
  json j;
  j["scenario"] = to_string(config.scenario);
  j["sizes"] = {{"m", config.m}, {"n", config.n}, {"p", config.p}, {"l", config.l}};
  j["replicates"] = config.replicates;
  j["M"] = config.M;
  j["master_seed"] = config.master_seed;
  j["failures"] = failures();
  std::vector<std::string> errors;
  for (const auto& r : replicates)
    if (!r.ok) errors.push_back("replicate " + std::to_string(r.replicate) + ": " + r.error);
  j["failure_messages"] = errors;

  double miss = 0.0, ok = 0.0, converged = 0.0;
  ErrorNorms ts{}, td{}, th{}, thr{};
  for (const auto& r : replicates) {
    if (!r.ok) continue;
    ok += 1.0;
    miss += r.achieved_missing;
    converged += r.fit_converged ? 1.0 : 0.0;
    ts.l2 += r.beta_sparse.l2; ts.l1 += r.beta_sparse.l1; ts.linf += r.beta_sparse.linf;
    td.l2 += r.beta_dense.l2; td.l1 += r.beta_dense.l1; td.linf += r.beta_dense.linf;
    th.l2 += r.theta_err.l2; th.l1 += r.theta_err.l1; th.linf += r.theta_err.linf;
    thr.l2 += r.theta_round_err.l2; thr.l1 += r.theta_round_err.l1; thr.linf += r.theta_round_err.linf;
  }
  auto norms = [&](const ErrorNorms& e) {
    return ok > 0 ? json{{"l2", e.l2 / ok}, {"l1", e.l1 / ok}, {"linf", e.linf / ok}} : json();
  };
  j["mean_missing_rate"] = ok > 0 ? miss / ok : 0.0;
  j["fit_converged_rate"] = ok > 0 ? converged / ok : 0.0;
  j["theta_error_vbmi"] = norms(th);

  std::size_t ntheta = 0;
  for (const auto& r : replicates)
    if (r.ok) ntheta = std::max(ntheta, r.theta_ci.size());
  std::vector<double> cov, cov_round, width;
  for (std::size_t t = 0; t < ntheta; ++t) {
    cov.push_back(theta_coverage(t));
    width.push_back(mean_width(replicates, t, &ReplicateResult::theta_ci));
  }
  j["theta_coverage_vbmi"] = cov;
  j["theta_ci_width_vbmi"] = width;
  j["theta_coverage_vbmi_median"] = median(cov);

  if (config.scenario == Scenario::Continuous) {
    j["beta_error_sparse"] = norms(ts);
    if (config.compare_dense) {
      j["beta_error_dense"] = norms(td);
      j["sparse_le_dense_rate"] = sparse_win_rate();
    }
    std::vector<double> bc, bw;
    for (Eigen::Index k = 0; k < beta_truth.size(); ++k) {
      bc.push_back(beta_coverage(static_cast<std::size_t>(k)));
      bw.push_back(mean_width(replicates, static_cast<std::size_t>(k), &ReplicateResult::beta_ci));
    }
    j["beta_truth"] = std::vector<double>(beta_truth.data(), beta_truth.data() + beta_truth.size());
    j["beta_coverage"] = bc;
    j["beta_ci_width"] = bw;
  } else if (config.rounding_baseline) {
    for (std::size_t t = 0; t < ntheta; ++t) cov_round.push_back(theta_coverage(t, true));
    j["theta_coverage_rounding"] = cov_round;
    j["theta_coverage_rounding_median"] = median(cov_round);
    j["theta_error_rounding"] = norms(thr);
  }
  return j.dump(2) + "\n";
}

void SimReport::write_csv(const std::string& path, bool include_timing) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
  out << "replicate,metric,index,value\n";
  auto row = [&](int r, const char* metric, long idx, double v) {
    out << r << ',' << metric << ',' << idx << ',' << format_double(v) << '\n';
  };
  for (const auto& r : replicates) {
    row(r.replicate, "ok", -1, r.ok ? 1.0 : 0.0);
    if (!r.ok) continue;
    row(r.replicate, "alpha_R", -1, r.alpha_R);
    row(r.replicate, "missing_rate", -1, r.achieved_missing);
    row(r.replicate, "fit_converged", -1, r.fit_converged ? 1.0 : 0.0);
    if (config.scenario == Scenario::Continuous) {
      row(r.replicate, "beta_l2_sparse", -1, r.beta_sparse.l2);
      row(r.replicate, "beta_l1_sparse", -1, r.beta_sparse.l1);
      row(r.replicate, "beta_linf_sparse", -1, r.beta_sparse.linf);
      if (config.compare_dense) {
        row(r.replicate, "beta_l2_dense", -1, r.beta_dense.l2);
        row(r.replicate, "beta_l1_dense", -1, r.beta_dense.l1);
        row(r.replicate, "beta_linf_dense", -1, r.beta_dense.linf);
      }
      for (std::size_t j = 0; j < r.beta_ci.size(); ++j) {
        row(r.replicate, "beta_estimate", long(j), r.beta_ci[j].estimate);
        row(r.replicate, "beta_covered", long(j), r.beta_ci[j].covered);
        row(r.replicate, "beta_ci_width", long(j), r.beta_ci[j].width());
      }
    }
    for (std::size_t j = 0; j < r.theta_ci.size(); ++j) {
      row(r.replicate, "theta_estimate", long(j), r.theta_ci[j].estimate);
      row(r.replicate, "theta_covered", long(j), r.theta_ci[j].covered);
      row(r.replicate, "theta_ci_width", long(j), r.theta_ci[j].width());
    }
    row(r.replicate, "theta_l2", -1, r.theta_err.l2);
    row(r.replicate, "theta_l1", -1, r.theta_err.l1);
    row(r.replicate, "theta_linf", -1, r.theta_err.linf);
    for (std::size_t j = 0; j < r.theta_round.size(); ++j) {
      row(r.replicate, "theta_round_estimate", long(j), r.theta_round[j].estimate);
      row(r.replicate, "theta_round_covered", long(j), r.theta_round[j].covered);
      row(r.replicate, "theta_round_ci_width", long(j), r.theta_round[j].width());
    }
    if (!r.theta_round.empty()) row(r.replicate, "theta_round_l2", -1, r.theta_round_err.l2);
    if (include_timing) row(r.replicate, "wall_seconds", -1, r.wall_seconds);
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

}  // namespace vbmi
