#pragma once
// Test-only reference code: local objectives written straight from their
// definitions with plain loops, plus small numerical maximizers.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

#include "vbmi/data.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/special.hpp"
#include "vbmi/vb.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Tiny {
  vbmi::RegressionView view;
  vbmi::Hyperparameters hyper;
  vbmi::VariationalState state;
  std::size_t m = 0, l = 0, p = 0;
};

inline MatrixXd random_spd(std::size_t l, vbmi::RngStream& rng) {
  MatrixXd A(l, l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) A(i, j) = 0.5 * rng.normal();
  return A * A.transpose() + 0.3 * MatrixXd::Identity(l, l);
}

inline double unif(vbmi::RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// m <= 3 clusters of 1..4 rows, p <= 3 covariates, l <= 2, random missing
// responses (at least one observed) and a fully random valid state.
inline Tiny random_tiny(std::uint64_t seed) {
  vbmi::RngStream rng(seed, 99);
  Tiny t;
  t.m = 1 + rng.below(3);
  t.p = 1 + rng.below(3);
  t.l = 1 + rng.below(2);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < t.m; ++i) sizes.push_back(1 + rng.below(4));
  vbmi::Design d;
  d.cluster_offsets = vbmi::offsets_from_sizes(sizes);
  const auto N = static_cast<Eigen::Index>(d.cluster_offsets.back());
  d.X.resize(N, t.p);
  d.Z.resize(N, t.l);
  VectorXd y(N);
  for (Eigen::Index r = 0; r < N; ++r) {
    for (std::size_t k = 0; k < t.p; ++k) d.X(r, k) = rng.normal();
    for (std::size_t j = 0; j < t.l; ++j) d.Z(r, j) = rng.normal();
    y(r) = rng.uniform() < 0.3 ? vbmi::kMissing : 2.0 * rng.normal();
  }
  y(0) = 1.5;
  t.view = vbmi::make_view(y, d);
  t.hyper = vbmi::Hyperparameters::defaults(t.l);
  t.hyper.a_w = unif(rng, 0.5, 2);
  t.hyper.b_w = unif(rng, 0.5, 2);
  t.hyper.a1 = unif(rng, 0.5, 2);
  t.hyper.b1 = unif(rng, 0.5, 2);
  t.hyper.V_inv = random_spd(t.l, rng);

  auto& s = t.state;
  const auto nm = static_cast<Eigen::Index>(t.view.missing_rows.size());
  s.mu_y = VectorXd(nm);
  s.sigma2_y = VectorXd(nm);
  for (Eigen::Index i = 0; i < nm; ++i) {
    s.mu_y(i) = rng.normal();
    s.sigma2_y(i) = unif(rng, 0.2, 2);
  }
  s.theta = VectorXd(t.p);
  s.mu_beta = VectorXd(t.p);
  s.sigma2_beta = VectorXd(t.p);
  for (std::size_t k = 0; k < t.p; ++k) {
    s.theta(k) = unif(rng, 0.1, 0.9);
    s.mu_beta(k) = rng.normal();
    s.sigma2_beta(k) = unif(rng, 0.2, 2);
  }
  for (std::size_t i = 0; i < t.m; ++i) {
    VectorXd mb(t.l);
    for (std::size_t j = 0; j < t.l; ++j) mb(j) = rng.normal();
    s.mu_b.push_back(mb);
    s.Psi_b.push_back(random_spd(t.l, rng));
  }
  s.a_e = unif(rng, 1, 5);
  s.b_e = unif(rng, 1, 5);
  s.Psi = random_spd(t.l, rng);
  s.mu_mu0 = rng.normal();
  s.sigma2_mu0 = unif(rng, 0.2, 2);
  s.a_s0 = unif(rng, 1, 3);
  s.b_s0 = unif(rng, 1, 3);
  s.a_w = unif(rng, 1, 4);
  s.b_w = unif(rng, 1, 4);
  return t;
}

// Observed value or the variational mean of a missing response.
inline VectorXd y_hat(const vbmi::VariationalState& s, const vbmi::RegressionView& v) {
  VectorXd out = v.y;
  for (std::size_t t = 0; t < v.missing_rows.size(); ++t) out(v.missing_rows[t]) = s.mu_y(t);
  return out;
}

inline std::size_t cluster_of(const vbmi::Design& d, std::size_t r) {
  std::size_t i = 0;
  while (d.cluster_offsets[i + 1] <= r) ++i;
  return i;
}

// ---- local objectives

inline double omega_A(const MatrixXd& Psi, const vbmi::VariationalState& s, const vbmi::Hyperparameters& h,
                      std::size_t m) {
  const double l = static_cast<double>(Psi.rows());
  MatrixXd S = h.V_inv;
  for (std::size_t i = 0; i < m; ++i) S += s.mu_b[i] * s.mu_b[i].transpose() + s.Psi_b[i];
  const MatrixXd P = Psi.inverse();
  return 0.5 * (m + h.nu - l - 1.0) * std::log(P.determinant()) - 0.5 * (P * S).trace();
}

inline double omega_B(double mu, double s2, double mean, double tau_e) {
  return -0.5 * tau_e * ((mu - mean) * (mu - mean) + s2) + 0.5 * std::log(s2);
}

inline double omega_C(const VectorXd& th, const VectorXd& mu, const VectorXd& s2, const vbmi::VariationalState& s,
                      const vbmi::RegressionView& v) {
  using vbmi::digamma;
  const auto& d = v.design;
  const std::size_t p = th.size();
  const double te = s.a_e / s.b_e, t0 = s.a_s0 / s.b_s0;
  const VectorXd yh = y_hat(s, v);
  MatrixXd D1 = MatrixXd::Zero(p, p);
  VectorXd vv = VectorXd::Zero(p);
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
    const std::size_t i = cluster_of(d, r);
    const double resid = yh(r) - d.Z.row(r).dot(s.mu_b[i]);
    for (std::size_t a = 0; a < p; ++a) {
      vv(a) += d.X(r, a) * resid;
      for (std::size_t b = 0; b < p; ++b) D1(a, b) += d.X(r, a) * d.X(r, b);
    }
  }
  const double psi_sum = digamma(s.a_w + s.b_w);
  double out = 0.0;
  VectorXd u(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double dm = mu(k) - s.mu_mu0;
    out += th(k) * (digamma(s.a_w) - psi_sum + 0.5 * (digamma(s.a_s0) - std::log(s.b_s0)) + 0.5 * std::log(s2(k)) +
                    0.5 - 0.5 * t0 * (dm * dm + s.sigma2_mu0 + s2(k)));
    out += (1.0 - th(k)) * (digamma(s.b_w) - psi_sum);
    out -= th(k) * std::log(th(k)) + (1.0 - th(k)) * std::log(1.0 - th(k));
    u(k) = th(k) * mu(k);
  }
  double quad = u.dot(D1 * u) - 2.0 * u.dot(vv);
  for (std::size_t k = 0; k < p; ++k)
    quad += D1(k, k) * (th(k) * (mu(k) * mu(k) + s2(k)) - th(k) * th(k) * mu(k) * mu(k));
  return out - 0.5 * te * quad;
}

inline double omega_D(std::size_t i, const VectorXd& mb, const MatrixXd& Pb, const vbmi::VariationalState& s,
                      const vbmi::RegressionView& v) {
  const auto& d = v.design;
  const double te = s.a_e / s.b_e;
  const VectorXd yh = y_hat(s, v);
  const VectorXd coef = s.theta.cwiseProduct(s.mu_beta);
  double acc = 0.0;
  for (auto r = d.cluster_offsets[i]; r < d.cluster_offsets[i + 1]; ++r) {
    const VectorXd z = d.Z.row(r).transpose();
    const double zm = z.dot(mb);
    acc += zm * zm + z.dot(Pb * z) - 2.0 * zm * (yh(r) - d.X.row(r).dot(coef));
  }
  const MatrixXd Pinv = s.Psi.inverse();
  return -0.5 * te * acc - 0.5 * (Pinv * Pb).trace() - 0.5 * mb.dot(Pinv * mb) + 0.5 * std::log(Pb.determinant());
}

inline double omega_E(double a, double b, double N, double ssr, const vbmi::Hyperparameters& h) {
  return (0.5 * N + h.a1 - a) * (vbmi::digamma(a) - std::log(b)) - (a / b) * (0.5 * ssr + h.b1 - b) + std::lgamma(a) -
         a * std::log(b);
}

inline double omega_F_s0(double a, double b, const vbmi::VariationalState& pre) {
  double st = 0.0, sq = 0.0;
  for (Eigen::Index k = 0; k < pre.theta.size(); ++k) {
    const double dm = pre.mu_beta(k) - pre.mu_mu0;
    st += pre.theta(k);
    sq += pre.theta(k) * (dm * dm + pre.sigma2_beta(k) + pre.sigma2_mu0);
  }
  return (0.5 * st + 1.0 - a) * (vbmi::digamma(a) - std::log(b)) - (a / b) * (0.5 * sq + 1.0 - b) - a * std::log(b) +
         std::lgamma(a);
}

inline double omega_F_w(double a, double b, const vbmi::VariationalState& s, const vbmi::Hyperparameters& h) {
  const double p = static_cast<double>(s.theta.size());
  const double st = s.theta.sum();
  using vbmi::digamma;
  return (st + h.a_w - a) * digamma(a) - (p + h.a_w + h.b_w - a - b) * digamma(a + b) +
         (p - st + h.b_w - b) * digamma(b) + std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double omega_F_mu0(double mu0, double s2, const vbmi::VariationalState& s) {
  const double t0 = s.a_s0 / s.b_s0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < s.theta.size(); ++k) {
    const double dm = s.mu_beta(k) - mu0;
    acc += s.theta(k) * (dm * dm + s2);
  }
  return -0.5 * t0 * acc - 0.5 * (s2 + mu0 * mu0) + 0.5 * std::log(s2);
}

// Largest increase of f over the +-h perturbations that stay in the domain (f finite).
inline double max_gain(const std::function<double(double)>& f, double x0, double h = 1e-4) {
  const double base = f(x0);
  double gain = -std::numeric_limits<double>::infinity();
  for (double x : {x0 + h, x0 - h}) {
    const double v = f(x);
    if (std::isfinite(v)) gain = std::max(gain, v - base);
  }
  return gain;
}

// Golden-section maximizer of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Cyclic coordinate maximization with golden-section line searches. Each
// coordinate's search window starts at +-width and then tracks its last step.
inline VectorXd coordinate_max(const std::function<double(const VectorXd&)>& f, VectorXd x, double width,
                               int sweeps = 200) {
  VectorXd win = VectorXd::Constant(x.size(), width);
  for (int it = 0; it < sweeps; ++it) {
    const VectorXd before = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      auto line = [&](double t) {
        VectorXd y = x;
        y(k) = t;
        return f(y);
      };
      const double next = golden_max(line, x(k) - win(k), x(k) + win(k));
      // a step that hit the window edge keeps the window wide
      const double step = std::abs(next - x(k));
      win(k) = step > 0.9 * win(k) ? win(k) : std::max(4.0 * step, 1e-9);
      x(k) = next;
    }
    if ((x - before).lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return x;
}

// Largest increase of each update's local objective over single-scalar +-h
// perturbations, evaluated right after that update on instance t.
struct GainReport {
  static constexpr int kUpdates = 6;  // psi, missing y, beta block, random effects, error variance, slab
  double gain[kUpdates];
  int checks[kUpdates];
};

inline GainReport local_gains(Tiny t, double h = 1e-4) {
  GainReport rep;
  for (int u = 0; u < GainReport::kUpdates; ++u) {
    rep.gain[u] = -std::numeric_limits<double>::infinity();
    rep.checks[u] = 0;
  }
  auto note = [&](int u, double g) {
    if (!std::isfinite(g)) return;
    rep.gain[u] = std::max(rep.gain[u], g);
    ++rep.checks[u];
  };
  auto& s = t.state;
  const auto& v = t.view;
  const auto& d = v.design;
  const auto N = static_cast<double>(d.X.rows());
  vbmi::FitOptions opts;
  const auto cache = vbmi::DesignCache::build(d);

  // Psi hat
  vbmi::update_psi_hat(s, t.hyper, t.m);
  for (Eigen::Index a = 0; a < s.Psi.rows(); ++a)
    for (Eigen::Index b = a; b < s.Psi.cols(); ++b)
      note(0, max_gain([&](double x) {
             MatrixXd P = s.Psi;
             P(a, b) = x;
             P(b, a) = x;
             return omega_A(P, s, t.hyper, t.m);
           }, s.Psi(a, b), h));

  // missing responses
  vbmi::update_missing_y(s, v);
  for (std::size_t q = 0; q < v.missing_rows.size(); ++q) {
    const auto r = static_cast<Eigen::Index>(v.missing_rows[q]);
    const std::size_t i = cluster_of(d, r);
    double mean = d.Z.row(r).dot(s.mu_b[i]);
    for (Eigen::Index k = 0; k < d.X.cols(); ++k) mean += d.X(r, k) * s.theta(k) * s.mu_beta(k);
    const auto qi = static_cast<Eigen::Index>(q);
    note(1, max_gain([&](double x) { return omega_B(x, s.sigma2_y(qi), mean, s.tau_e()); }, s.mu_y(qi), h));
    note(1, max_gain([&](double x) { return x > 0 ? omega_B(s.mu_y(qi), x, mean, s.tau_e()) : NAN; },
                     s.sigma2_y(qi), h));
  }

  // beta block: mu and s2 at the previous theta, theta_k with the others previous
  {
    const vbmi::VariationalState pre = s;
    vbmi::update_beta_block(s, v, cache, opts);
    for (Eigen::Index k = 0; k < s.theta.size(); ++k) {
      note(2, max_gain([&](double x) {
             VectorXd mu = s.mu_beta;
             mu(k) = x;
             return omega_C(pre.theta, mu, s.sigma2_beta, pre, v);
           }, s.mu_beta(k), h));
      note(2, max_gain([&](double x) {
             VectorXd s2 = s.sigma2_beta;
             s2(k) = x;
             return x > 0 ? omega_C(pre.theta, s.mu_beta, s2, pre, v) : NAN;
           }, s.sigma2_beta(k), h));
      VectorXd th = pre.theta;
      th(k) = s.theta(k);
      note(2, max_gain([&](double x) {
             VectorXd tt = th;
             tt(k) = x;
             return (x > 0 && x < 1) ? omega_C(tt, s.mu_beta, s.sigma2_beta, pre, v) : NAN;
           }, th(k), h));
    }
  }

  // random effects
  vbmi::update_random_effects(s, v);
  for (std::size_t i = 0; i < t.m; ++i) {
    for (Eigen::Index a = 0; a < s.mu_b[i].size(); ++a)
      note(3, max_gain([&](double x) {
             VectorXd mb = s.mu_b[i];
             mb(a) = x;
             return omega_D(i, mb, s.Psi_b[i], s, v);
           }, s.mu_b[i](a), h));
    for (Eigen::Index a = 0; a < s.Psi_b[i].rows(); ++a)
      for (Eigen::Index b = a; b < s.Psi_b[i].cols(); ++b)
        note(3, max_gain([&](double x) {
               MatrixXd P = s.Psi_b[i];
               P(a, b) = x;
               P(b, a) = x;
               return omega_D(i, s.mu_b[i], P, s, v);
             }, s.Psi_b[i](a, b), h));
  }

  // error variance
  const double ssr = vbmi::compute_ssr(s, v);
  vbmi::update_error_variance(s, t.hyper, d.rows(), ssr);
  note(4, max_gain([&](double x) { return x > 0 ? omega_E(x, s.b_e, N, ssr, t.hyper) : NAN; }, s.a_e, h));
  note(4, max_gain([&](double x) { return x > 0 ? omega_E(s.a_e, x, N, ssr, t.hyper) : NAN; }, s.b_e, h));

  // slab hyperparameters, each pair conditioned on what its update saw
  {
    const vbmi::VariationalState pre = s;
    vbmi::update_slab_hyper(s, t.hyper, opts);
    note(5, max_gain([&](double x) { return x > 0 ? omega_F_s0(x, s.b_s0, pre) : NAN; }, s.a_s0, h));
    note(5, max_gain([&](double x) { return x > 0 ? omega_F_s0(s.a_s0, x, pre) : NAN; }, s.b_s0, h));
    note(5, max_gain([&](double x) { return x > 0 ? omega_F_w(x, s.b_w, s, t.hyper) : NAN; }, s.a_w, h));
    note(5, max_gain([&](double x) { return x > 0 ? omega_F_w(s.a_w, x, s, t.hyper) : NAN; }, s.b_w, h));
    note(5, max_gain([&](double x) { return omega_F_mu0(x, s.sigma2_mu0, s); }, s.mu_mu0, h));
    note(5, max_gain([&](double x) { return x > 0 ? omega_F_mu0(s.mu_mu0, x, s) : NAN; }, s.sigma2_mu0, h));
  }
  return rep;
}

}  // namespace oracle
