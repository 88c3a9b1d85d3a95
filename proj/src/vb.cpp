#include "vbmi/vb.hpp"

#include <algorithm>
#include <cmath>

#include "vbmi/error.hpp"
#include "vbmi/kernels.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/special.hpp"

namespace vbmi {

namespace {

constexpr double kThetaEps = 1e-12;
constexpr std::uint64_t kInitStream = 0x1A17ull;

bool is_spd(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) return false;
  if (!M.isApprox(M.transpose(), 1e-10)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& M, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::CholeskyFailure, what);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

Hyperparameters Hyperparameters::defaults(std::size_t l) {
  Hyperparameters h;
  h.nu = static_cast<double>(l) + 2.0;
  h.V_inv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  return h;
}

void Hyperparameters::validate(std::size_t l) const {
  if (!(a_w > 0 && b_w > 0 && a1 > 0 && b1 > 0))
    throw Error(ErrorCode::InvalidArgument, "a_w, b_w, a1 and b1 must be positive");
  if (!(nu > static_cast<double>(l) - 1.0))
    throw Error(ErrorCode::InvalidArgument, "nu must exceed l - 1");
  if (static_cast<std::size_t>(V_inv.rows()) != l || static_cast<std::size_t>(V_inv.cols()) != l)
    throw Error(ErrorCode::DimensionMismatch, "V_inv must be l x l");
  if (!is_spd(V_inv)) throw Error(ErrorCode::InvalidArgument, "V_inv must be symmetric positive definite");
}

void FitOptions::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
}

std::vector<double> VariationalState::flatten() const {
  std::vector<double> out;
  auto put = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data()[i]);
  };
  put(mu_y);
  put(sigma2_y);
  put(theta);
  put(mu_beta);
  put(sigma2_beta);
  for (const auto& v : mu_b) put(v);
  for (const auto& P : Psi_b) put(P);
  out.push_back(a_e);
  out.push_back(b_e);
  put(Psi);
  for (double x : {mu_mu0, sigma2_mu0, a_s0, b_s0, a_w, b_w}) out.push_back(x);
  return out;
}

bool VariationalState::all_finite() const {
  for (double x : flatten())
    if (!std::isfinite(x)) return false;
  return true;
}

void VariationalState::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::NumericalFailure, what); };
  if (!all_finite()) fail("non-finite variational parameter");
  if ((sigma2_y.array() <= 0).any() || (sigma2_beta.array() <= 0).any()) fail("non-positive variance");
  if ((theta.array() <= 0).any() || (theta.array() >= 1 + 1e-15).any()) fail("theta outside (0,1]");
  if (!(a_e > 0 && b_e > 0 && a_s0 > 0 && b_s0 > 0 && a_w > 0 && b_w > 0 && sigma2_mu0 > 0))
    fail("non-positive scale parameter");
  if (!is_spd(Psi)) fail("Psi_hat is not SPD");
  for (const auto& P : Psi_b)
    if (!is_spd(P)) fail("Psi_b is not SPD");
}

DesignCache DesignCache::build(const Design& design) {
  return {kernels::gram(design.X), kernels::col_sumsq(design.X)};
}

ResponseMoments response_moments(const VariationalState& s, const RegressionView& view) {
  ResponseMoments m{view.y, view.y.array().square().matrix()};
  for (std::size_t t = 0; t < view.missing_rows.size(); ++t) {
    const auto r = static_cast<Eigen::Index>(view.missing_rows[t]);
    m.y_hat(r) = s.mu_y(t);
    m.y_sq(r) = s.mu_y(t) * s.mu_y(t) + s.sigma2_y(t);
  }
  return m;
}

Eigen::VectorXd random_effect_means(const VariationalState& s, const Design& design) {
  Eigen::VectorXd out(design.X.rows());
  const auto& off = design.cluster_offsets;
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    const auto b = static_cast<Eigen::Index>(off[i]);
    const auto n = static_cast<Eigen::Index>(off[i + 1] - off[i]);
    if (n > 0) out.segment(b, n).noalias() = design.Z.middleRows(b, n) * s.mu_b[i];
  }
  return out;
}

VariationalState init_state(const RegressionView& view, const Hyperparameters& hyper,
                            const FitOptions& options) {
  const auto& d = view.design;
  const auto N = static_cast<Eigen::Index>(d.rows());
  const auto p = static_cast<Eigen::Index>(d.p());
  const auto l = static_cast<Eigen::Index>(d.l());
  const std::size_t m = d.clusters();
  const std::size_t n_obs = view.observed_count();
  if (n_obs == 0) throw Error(ErrorCode::NoObservedResponses, "every response cell is missing");

  double mean = 0.0;
  for (Eigen::Index r = 0; r < N; ++r)
    if (!std::isnan(view.y(r))) mean += view.y(r);
  mean /= static_cast<double>(n_obs);
  double var = 0.0;
  for (Eigen::Index r = 0; r < N; ++r)
    if (!std::isnan(view.y(r))) var += (view.y(r) - mean) * (view.y(r) - mean);
  var = n_obs > 1 ? var / static_cast<double>(n_obs - 1) : 0.0;

  RngStream rng(options.seed, kInitStream);
  auto jitter = [&](double x) {
    const double u = 2.0 * rng.uniform() - 1.0;
    return x == 0.0 ? 0.01 * u : x * (1.0 + 0.01 * u);
  };

  VariationalState s;
  const auto nmis = static_cast<Eigen::Index>(view.missing_rows.size());
  s.mu_y = Eigen::VectorXd::Constant(nmis, mean);
  s.sigma2_y = Eigen::VectorXd::Constant(nmis, var > 0 ? var : 1.0);
  s.theta = Eigen::VectorXd::Constant(p, options.spike_enabled ? 0.5 : 1.0);
  s.mu_beta = Eigen::VectorXd::Zero(p);
  s.sigma2_beta = Eigen::VectorXd::Ones(p);
  s.mu_b.assign(m, Eigen::VectorXd::Zero(l));
  s.Psi_b.assign(m, Eigen::MatrixXd::Identity(l, l));
  s.a_e = hyper.a1 + 0.5 * static_cast<double>(N);
  s.b_e = hyper.b1 + 0.5 * var * static_cast<double>(N);
  s.Psi = Eigen::MatrixXd::Identity(l, l);
  s.a_s0 = 1.0;
  s.b_s0 = 1.0;
  s.a_w = hyper.a_w;
  s.b_w = hyper.b_w;
  s.mu_mu0 = 0.0;
  s.sigma2_mu0 = 1.0;

  for (Eigen::Index t = 0; t < nmis; ++t) {
    s.mu_y(t) = jitter(s.mu_y(t));
    s.sigma2_y(t) = jitter(s.sigma2_y(t));
  }
  for (Eigen::Index k = 0; k < p; ++k) {
    if (options.spike_enabled) s.theta(k) = jitter(s.theta(k));
    s.mu_beta(k) = jitter(s.mu_beta(k));
    s.sigma2_beta(k) = jitter(s.sigma2_beta(k));
  }
  for (auto& v : s.mu_b)
    for (Eigen::Index j = 0; j < l; ++j) v(j) = jitter(v(j));
  s.b_e = jitter(s.b_e);
  s.b_s0 = jitter(s.b_s0);
  s.mu_mu0 = jitter(s.mu_mu0);
  s.sigma2_mu0 = jitter(s.sigma2_mu0);
  return s;
}

void update_psi_hat(VariationalState& s, const Hyperparameters& hyper, std::size_t m) {
  const auto l = hyper.V_inv.rows();
  const double denom = static_cast<double>(m) + hyper.nu - static_cast<double>(l) - 1.0;
  if (!(denom > 0)) throw Error(ErrorCode::DegenerateDenominator, "m + nu - l - 1 must be positive");
  Eigen::MatrixXd S = hyper.V_inv;
  for (std::size_t i = 0; i < m; ++i) S += s.mu_b[i] * s.mu_b[i].transpose() + s.Psi_b[i];
  s.Psi = 0.5 * (S + S.transpose()) / denom;
}

void update_missing_y(VariationalState& s, const RegressionView& view) {
  if (view.missing_rows.empty()) return;
  const auto& d = view.design;
  const Eigen::VectorXd coef = s.beta_mean();
  const auto& off = d.cluster_offsets;
  std::size_t cluster = 0;
  for (std::size_t t = 0; t < view.missing_rows.size(); ++t) {
    const std::size_t r = view.missing_rows[t];
    while (off[cluster + 1] <= r) ++cluster;
    const auto ri = static_cast<Eigen::Index>(r);
    s.mu_y(t) = d.X.row(ri).dot(coef) + d.Z.row(ri).dot(s.mu_b[cluster]);
  }
  s.sigma2_y.setConstant(s.b_e / s.a_e);
}

void update_beta_block(VariationalState& s, const RegressionView& view, const DesignCache& cache,
                       const FitOptions& options) {
  const auto& d = view.design;
  const Eigen::Index p = d.X.cols();
  if (p == 0) return;
  const ResponseMoments mom = response_moments(s, view);
  const Eigen::VectorXd v = kernels::crossprod(d.X, mom.y_hat - random_effect_means(s, d));
  const double te = s.tau_e();
  const double t0 = s.tau_0();
  const Eigen::VectorXd& D2 = cache.xsq_colsums;

  const double prior_prec = options.alt_forms ? 0.5 * t0 : t0;
  s.sigma2_beta = (te * D2.array() + prior_prec).inverse().matrix();

  // Symmetric form of [te (D1 Theta + D2 (I - Theta)) + t0 I] mu = rhs:
  // S = te Th^1/2 D1 Th^1/2 + diag(te D2 (1 - th) + t0), mu = Th^-1/2 S^-1 Th^1/2 rhs.
  const Eigen::ArrayXd sq = s.theta.array().sqrt();
  Eigen::MatrixXd S = te * (sq.matrix().asDiagonal() * cache.D1 * sq.matrix().asDiagonal());
  S.diagonal().array() += te * D2.array() * (1.0 - s.theta.array()) + t0;
  const Eigen::VectorXd rhs = te * v + Eigen::VectorXd::Constant(p, t0 * s.mu_mu0);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "slab mean system is not positive definite");
  const Eigen::VectorXd w = llt.solve((sq * rhs.array()).matrix());
  s.mu_beta = (w.array() / sq).matrix();

  if (!options.spike_enabled) {
    s.theta.setOnes();
    return;
  }
  const double prior_logodds = digamma(s.a_w) - digamma(s.b_w);
  const double half_log_prec = 0.5 * (digamma(s.a_s0) - std::log(s.b_s0));
  for (Eigen::Index k = 0; k < p; ++k) {
    const double mu = s.mu_beta(k), s2 = s.sigma2_beta(k);
    const double dm = mu - s.mu_mu0;
    const double z = prior_logodds + half_log_prec + 0.5 * std::log(s2) + 0.5 -
                     0.5 * t0 * (dm * dm + s.sigma2_mu0 + s2) - 0.5 * te * D2(k) * (mu * mu + s2) +
                     mu * mu / s2 - t0 * s.mu_mu0 * mu;
    s.theta(k) = std::clamp(inv_logit(z), kThetaEps, 1.0 - kThetaEps);
  }
}

void update_random_effects(VariationalState& s, const RegressionView& view) {
  const auto& d = view.design;
  const double te = s.tau_e();
  const ResponseMoments mom = response_moments(s, view);
  const Eigen::VectorXd resid = mom.y_hat - kernels::matvec(d.X, s.beta_mean());
  const Eigen::MatrixXd Psi_inv = spd_inverse(s.Psi, "Psi_hat is not SPD");
  const auto& off = d.cluster_offsets;
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    const auto b = static_cast<Eigen::Index>(off[i]);
    const auto n = static_cast<Eigen::Index>(off[i + 1] - off[i]);
    if (n == 0) {
      s.Psi_b[i] = s.Psi;
      s.mu_b[i].setZero();
      continue;
    }
    const auto Zi = d.Z.middleRows(b, n);
    Eigen::MatrixXd P = te * (Zi.transpose() * Zi) + Psi_inv;
    s.Psi_b[i] = spd_inverse(0.5 * (P + P.transpose()), "random-effect precision is not SPD");
    s.mu_b[i] = s.Psi_b[i] * (te * (Zi.transpose() * resid.segment(b, n)));
  }
}

double compute_ssr(const VariationalState& s, const RegressionView& view) {
  const auto& d = view.design;
  const auto N = d.X.rows();
  if (N == 0) return 0.0;
  const ResponseMoments mom = response_moments(s, view);
  const Eigen::VectorXd xb = kernels::matvec(d.X, s.beta_mean());
  const Eigen::ArrayXd th = s.theta.array();
  const Eigen::VectorXd w =
      (th * (1.0 - th) * s.mu_beta.array().square() + th * s.sigma2_beta.array()).matrix();
  const Eigen::VectorXd var_beta = kernels::matvec(d.X.array().square().matrix(), w);

  Eigen::VectorXd zb(N), zqz(N);
  const auto& off = d.cluster_offsets;
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    const Eigen::MatrixXd second = s.mu_b[i] * s.mu_b[i].transpose() + s.Psi_b[i];
    for (auto r = static_cast<Eigen::Index>(off[i]); r < static_cast<Eigen::Index>(off[i + 1]); ++r) {
      const auto z = d.Z.row(r);
      zb(r) = z.dot(s.mu_b[i]);
      zqz(r) = z * second * z.transpose();
    }
  }
  const Eigen::VectorXd terms =
      (mom.y_sq.array() + zqz.array() + xb.array().square() + var_beta.array() -
       2.0 * mom.y_hat.array() * (xb.array() + zb.array()) + 2.0 * zb.array() * xb.array())
          .matrix();
  return std::max(0.0, kernels::sum(terms));
}

void update_error_variance(VariationalState& s, const Hyperparameters& hyper, std::size_t N,
                           double ssr) {
  s.a_e = hyper.a1 + 0.5 * static_cast<double>(N);
  s.b_e = hyper.b1 + 0.5 * ssr;
}

void update_slab_hyper(VariationalState& s, const Hyperparameters& hyper, const FitOptions& options) {
  const Eigen::ArrayXd th = s.theta.array();
  const double sum_th = th.sum();
  const Eigen::ArrayXd q =
      (s.mu_beta.array() - s.mu_mu0).square() + s.sigma2_mu0 + s.sigma2_beta.array();
  s.a_s0 = 1.0 + 0.5 * sum_th;
  s.b_s0 = 1.0 + 0.5 * (th * q).sum();
  if (options.alt_forms)
    s.b_s0 += 0.5 * ((1.0 - th) * (s.mu_mu0 * s.mu_mu0 + s.sigma2_mu0)).sum();
  s.a_w = hyper.a_w + sum_th;
  s.b_w = hyper.b_w + (1.0 - th).sum();
  const double t0 = s.tau_0();
  const Eigen::ArrayXd wt = options.alt_forms ? Eigen::ArrayXd(th.square()) : th;
  s.sigma2_mu0 = 1.0 / (1.0 + t0 * (options.alt_forms ? wt.sum() : sum_th));
  s.mu_mu0 = s.sigma2_mu0 * t0 * (wt * s.mu_beta.array()).sum();
}

double convergence_metric(const VariationalState& prev, const VariationalState& next) {
  const auto a = prev.flatten();
  const auto b = next.flatten();
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "states have different shapes");
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(b[i] - a[i]) / (1.0 + std::abs(a[i])));
  return out;
}

FitResult fit(const RegressionView& view, const Hyperparameters& hyper, const FitOptions& options) {
  const auto& d = view.design;
  d.validate();
  hyper.validate(d.l());
  options.validate();
  const DesignCache cache = DesignCache::build(d);
  FitResult res{init_state(view, hyper, options), {}};
  auto& s = res.state;
  auto& diag = res.diagnostics;
  for (int it = 1; it <= options.max_iters; ++it) {
    const VariationalState prev = s;
    update_psi_hat(s, hyper, d.clusters());
    update_missing_y(s, view);
    update_beta_block(s, view, cache, options);
    update_random_effects(s, view);
    update_error_variance(s, hyper, d.rows(), compute_ssr(s, view));
    update_slab_hyper(s, hyper, options);
    if (!s.all_finite())
      throw Error(ErrorCode::NumericalFailure, "non-finite parameter at iteration " + std::to_string(it));
    const double change = convergence_metric(prev, s);
    diag.trace.push_back(change);
    diag.iterations_run = it;
    diag.final_change = change;
    if (change < options.tol) {
      diag.converged = true;
      break;
    }
  }
  s.check_invariants();
  return res;
}

}  // namespace vbmi
