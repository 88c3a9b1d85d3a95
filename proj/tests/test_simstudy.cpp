#include <doctest.h>

#include "test_util.hpp"
#include "vbmi/simstudy.hpp"
#include "vbmi/special.hpp"

using doctest::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testutil::error_code_of;

namespace {

double corr(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

vbmi::SimConfig big(int m, int n, int p) {
  vbmi::SimConfig c;
  c.m = m;
  c.n = n;
  c.p = p;
  return c;
}

}  // namespace

TEST_CASE("three-peak coefficients") {
  // reference values from 40-digit evaluations of the scaled Beta mixture
  CHECK(vbmi::three_peak_beta(3)(0) == Approx(1.9868380803770045604).epsilon(1e-9));
  const VectorXd b40 = vbmi::three_peak_beta(40);
  CHECK(b40(12) == Approx(0.99033478928884423727).epsilon(1e-9));
  CHECK(b40(22) == Approx(0.87610922602486812352).epsilon(1e-9));
  CHECK(b40(31) == Approx(0.54000054541533700382).epsilon(1e-9));
  const VectorXd b100 = vbmi::three_peak_beta(100);
  CHECK(b100(4) < 1e-8);
  CHECK((b100.array() >= 0).all());
  CHECK(b100.allFinite());
}

TEST_CASE("continuous generator") {
  auto cfg = big(100, 25, 40);
  vbmi::RngStream rng(1, 1);
  const auto d = vbmi::gen_continuous(cfg, rng);
  const double n = static_cast<double>(d.X.size());
  const double mean = d.X.mean();
  const double var = (d.X.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(var - 9.0) < 0.4);
  CHECK(d.Psi.isIdentity());
  CHECK(d.beta == vbmi::three_peak_beta(40));

  vbmi::RngStream again(1, 1);
  CHECK(vbmi::gen_continuous(cfg, again).y == d.y);

  vbmi::GeneratorOverrides ov;
  ov.beta = VectorXd::Zero(40);
  vbmi::RngStream r2(2, 1);
  const auto null = vbmi::gen_continuous(cfg, r2, ov);
  const double bound = 4.0 / std::sqrt(static_cast<double>(cfg.N()));
  for (int k = 0; k < 40; ++k) CHECK(std::abs(corr(null.y, null.X.col(k))) < bound);
}

TEST_CASE("missing-at-random mask") {
  vbmi::SimConfig cfg;
  cfg.beta_mis = 0.0;
  VectorXd x(10);
  x.setLinSpaced(-3, 3);
  CHECK(vbmi::calibrate_alpha(x, 0.0, 0.27) == Approx(-0.99462257514406205491).epsilon(1e-14));

  vbmi::RngStream rng(3, 3);
  const int n = 100000;
  VectorXd x1(n);
  for (int i = 0; i < n; ++i) x1(i) = 3.0 * rng.normal();
  cfg.beta_mis = 0.3;
  const auto mask = vbmi::gen_mar_mask(x1, cfg, rng);
  CHECK(std::abs(mask.expected_rate - 0.27) <= 0.002);
  CHECK(std::abs(mask.achieved_rate - 0.27) < 0.01);

  double pos = 0, pos_n = 0, neg = 0, neg_n = 0;
  for (int i = 0; i < n; ++i) {
    if (x1(i) > 0) {
      pos += mask.missing[i];
      pos_n += 1;
    } else {
      neg += mask.missing[i];
      neg_n += 1;
    }
  }
  const double p1 = pos / pos_n, p0 = neg / neg_n, pp = (pos + neg) / n;
  const double se = std::sqrt(pp * (1 - pp) * (1 / pos_n + 1 / neg_n));
  CHECK(std::abs(p1 - p0) > 5 * se);

  CHECK(error_code_of([&] { vbmi::calibrate_alpha(x1, 0.3, 1e-12); }) == vbmi::ErrorCode::CalibrationFailure);
}

TEST_CASE("binary generator") {
  auto cfg = big(30, 15, 25);
  vbmi::RngStream rng(4, 4);
  const auto d = vbmi::gen_binary(cfg, rng);
  CHECK(d.beta.head(10).norm() == Approx(1.0).epsilon(1e-15));
  CHECK(d.beta.tail(15).isZero(0.0));
  CHECK(((d.y.array() == 1.0) || (d.y.array() == 2.0)).all());

  auto wide = big(400, 250, 3);
  vbmi::GeneratorOverrides ov;
  ov.beta = VectorXd::Zero(3);
  ov.zero_random_effects = true;
  vbmi::RngStream r2(5, 5);
  const auto null = vbmi::gen_binary(wide, r2, ov);
  const double share = (null.y.array() == 2.0).cast<double>().mean();
  CHECK(std::abs(share - 0.5) < 0.007);
}

TEST_CASE("multinomial generator") {
  auto cfg = big(400, 250, 3);
  cfg.scenario = vbmi::Scenario::Multinomial;
  vbmi::GeneratorOverrides ov;
  ov.class_betas = std::vector<VectorXd>(5, VectorXd::Zero(3));
  ov.zero_random_effects = true;
  vbmi::RngStream rng(6, 6);
  const auto d = vbmi::gen_multinomial(cfg, rng, ov);
  const double N = cfg.N();
  for (int g = 1; g <= 5; ++g) {
    const double share = (d.y.array() == g).cast<double>().mean();
    CHECK(std::abs(share - 0.2) < 4 * std::sqrt(0.2 * 0.8 / N));
  }

  vbmi::RngStream r2(7, 7);
  for (int i = 0; i < 100; ++i) {
    VectorXd eta(5);
    for (auto& e : eta) e = 3 * r2.normal();
    CHECK(vbmi::softmax(eta).sum() == Approx(1.0).epsilon(1e-12));
    VectorXd two(2);
    two << eta(0), eta(1);
    CHECK(vbmi::softmax(two)(1) == Approx(vbmi::inv_logit(eta(1) - eta(0))).epsilon(1e-12));
  }

  auto small = big(30, 15, 12);
  small.scenario = vbmi::Scenario::Multinomial;
  vbmi::RngStream r3(8, 8);
  const auto g = vbmi::gen_multinomial(small, r3);
  CHECK(g.class_betas.size() == 5);
  for (const auto& b : g.class_betas) CHECK(b.head(10).norm() == Approx(1.0).epsilon(1e-15));
  CHECK(((g.y.array() >= 1) && (g.y.array() <= 5)).all());
}

TEST_CASE("second layer") {
  vbmi::RngStream rng(9, 9);
  vbmi::SecondLayerOverrides zero;
  zero.zero_noise = true;
  const auto c = vbmi::gen_second_layer(VectorXd::Ones(4), {0, 2, 4}, vbmi::Scenario::Continuous, rng, zero);
  CHECK(c.u == VectorXd::Constant(4, 2.0));

  // binary codes 1/2 enter the matrix as 0/1
  VectorXd y(6);
  y << 2, 1, 1, 2, 2, 2;
  const std::vector<std::size_t> off = {0, 3, 6};
  zero.theta = VectorXd::Unit(3, 0);
  const auto b = vbmi::gen_second_layer(y, off, vbmi::Scenario::Binary, rng, zero);
  const MatrixXd Y = vbmi::response_matrix(y, off, vbmi::Scenario::Binary);
  CHECK(b.u == Y.col(0));
  CHECK(Y(0, 0) == 1.0);
  CHECK(Y(0, 1) == 0.0);

  const int m = 100000;
  std::vector<std::size_t> offs(m + 1);
  for (int i = 0; i <= m; ++i) offs[i] = i;
  vbmi::SecondLayerOverrides th;
  th.theta = VectorXd::Zero(1);
  const auto e = vbmi::gen_second_layer(VectorXd::Ones(m), offs, vbmi::Scenario::Binary, rng, th);
  const double var = (e.u.array() - e.u.mean()).square().sum() / (m - 1);
  CHECK(std::abs(var - 25.0) < 1.0);

  CHECK(error_code_of([&] {
          vbmi::gen_second_layer(VectorXd::Ones(5), off, vbmi::Scenario::Binary, rng);
        }) == vbmi::ErrorCode::DimensionMismatch);
}

TEST_CASE("error norms") {
  const auto e = vbmi::error_norms(VectorXd::Constant(2, 0.0), (VectorXd(2) << -1.0, 2.0).finished());
  CHECK(e.l2 == Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(e.l1 == 3.0);
  CHECK(e.linf == 2.0);
  const auto z = vbmi::error_norms(VectorXd::Ones(3), VectorXd::Ones(3));
  CHECK(z.l2 == 0.0);
  CHECK(z.l1 == 0.0);
  CHECK(z.linf == 0.0);
  const auto d = vbmi::error_norms((VectorXd(2) << 2.0, -4.0).finished(), VectorXd::Zero(2));
  CHECK(d.l2 == 2 * e.l2);
  CHECK(d.l1 == 2 * e.l1);
  CHECK(d.linf == 2 * e.linf);
  CHECK(error_code_of([] { vbmi::error_norms(VectorXd(2), VectorXd(3)); }) == vbmi::ErrorCode::DimensionMismatch);
}

TEST_CASE("study runs are deterministic and record paired errors") {
  vbmi::SimConfig cfg;
  cfg.m = 10;
  cfg.n = 6;
  cfg.p = 8;
  cfg.l = 1;
  cfg.replicates = 2;
  cfg.M = 3;
  const auto a = vbmi::run_study(cfg);
  const auto b = vbmi::run_study(cfg);
  CHECK(a.failures() == 0);
  CHECK(a.summary_json() == b.summary_json());
  for (int r = 0; r < 2; ++r) {
    CHECK(a.replicates[r].beta_sparse.l2 == b.replicates[r].beta_sparse.l2);
    CHECK(a.replicates[r].beta_dense.l2 > 0.0);
    CHECK(a.replicates[r].beta_ci.size() == 8);
    CHECK(a.replicates[r].theta_ci.size() == 2);
  }
  testutil::TempDir dir("study");
  a.write_csv(dir.file("a.csv"));
  b.write_csv(dir.file("b.csv"));
  CHECK(testutil::read_file(dir.file("a.csv")) == testutil::read_file(dir.file("b.csv")));

  for (auto s : {vbmi::Scenario::Binary, vbmi::Scenario::Multinomial}) {
    auto c = cfg;
    c.scenario = s;
    const auto rep = vbmi::run_study(c);
    CHECK(rep.failures() == 0);
    CHECK(rep.replicates[0].theta_ci.size() == 6);
    CHECK(rep.replicates[0].theta_round.size() == 6);
  }
}

TEST_CASE("scenario names and config validation") {
  CHECK(vbmi::parse_scenario("binary") == vbmi::Scenario::Binary);
  CHECK(vbmi::to_string(vbmi::Scenario::Multinomial) == "multinomial");
  CHECK(error_code_of([] { vbmi::parse_scenario("ordinal"); }) == vbmi::ErrorCode::InvalidArgument);
  vbmi::SimConfig c;
  c.miss_target = 1.0;
  CHECK(error_code_of([&] { c.validate(); }) == vbmi::ErrorCode::InvalidArgument);
  const auto full = vbmi::SimConfig::full_scale(vbmi::Scenario::Continuous);
  CHECK(full.p == 100);
  CHECK(full.replicates == 1000);
}
