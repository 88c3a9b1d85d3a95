#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vbmi/data.hpp"
#include "vbmi/rng.hpp"

using vbmi::ErrorCode;
using vbmi::VariableSpec;
using testutil::error_code_of;

namespace {

std::vector<VariableSpec> two_vars() {
  return {VariableSpec::continuous("x"), VariableSpec::categorical("g", 2, {"no", "yes"})};
}

// Random dataset with masked cells; categorical cells hold codes.
vbmi::ClusteredDataset random_dataset(std::uint64_t seed) {
  vbmi::RngStream rng(seed, 1);
  const std::size_t m = 1 + rng.below(5);
  std::vector<std::string> ids;
  std::vector<std::size_t> sizes;
  std::size_t N = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ids.push_back("c" + std::to_string(i * 7 + 3));
    sizes.push_back(1 + rng.below(6));
    N += sizes.back();
  }
  std::vector<VariableSpec> vars = {VariableSpec::continuous("a"), VariableSpec::categorical("b", 4),
                                    VariableSpec::categorical("c", 3, {"lo", "mid", "hi"}),
                                    VariableSpec::continuous("d")};
  Eigen::MatrixXd values(N, 4);
  vbmi::BoolMatrix mask(N, 4);
  for (std::size_t r = 0; r < N; ++r) {
    values(r, 0) = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    values(r, 1) = 1.0 + static_cast<double>(rng.below(4));
    values(r, 2) = 1.0 + static_cast<double>(rng.below(3));
    values(r, 3) = rng.uniform() / 3.0;
    for (int k = 0; k < 4; ++k) {
      mask(r, k) = rng.uniform() < 0.2;
      if (mask(r, k)) values(r, k) = vbmi::kMissing;
    }
  }
  return vbmi::ClusteredDataset(ids, sizes, vars, values, mask);
}

bool same_cells(const vbmi::ClusteredDataset& a, const vbmi::ClusteredDataset& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a.missing(r, k) != b.missing(r, k)) return false;
      if (!a.missing(r, k) && a.value(r, k) != b.value(r, k)) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("load_csv groups clusters in first-appearance order and marks NA") {
  testutil::TempDir dir("load");
  const auto path = dir.file("d.csv");
  testutil::write_file(path, "cluster,x,g\nB,1.5,yes\nA,2,no\nB,NA,no\nA,-3,yes\n");
  const auto d = vbmi::load_csv(path, two_vars(), "cluster");
  REQUIRE(d.rows() == 4);
  CHECK(d.cluster_ids() == std::vector<std::string>{"B", "A"});
  CHECK(d.cluster_sizes() == std::vector<std::size_t>{2, 2});
  CHECK(d.missing_count() == 1);
  CHECK(d.missing(1, 0));
  CHECK(d.value(0, 0) == 1.5);
  CHECK(d.value(2, 0) == 2.0);
  CHECK(d.value(0, 1) == 2.0);
  CHECK(d.value(1, 1) == 1.0);
}

TEST_CASE("load_csv error paths") {
  testutil::TempDir dir("errors");
  auto load = [&](const std::string& text) {
    const auto path = dir.file("e.csv");
    testutil::write_file(path, text);
    return error_code_of([&] { vbmi::load_csv(path, two_vars(), "cluster"); });
  };
  CHECK(load("cluster,x,g\n1,1,maybe\n") == ErrorCode::UnknownCategoryLabel);
  CHECK(load("cluster,x,g\n1,abc,yes\n") == ErrorCode::NonNumericContinuousCell);
  CHECK(load("cluster,x\n1,1\n") == ErrorCode::MissingColumn);
  CHECK(load("id,x,g\n1,1,yes\n") == ErrorCode::MissingColumn);
  CHECK(load("cluster,x,g\n") == ErrorCode::EmptyDataset);
  CHECK(load("") == ErrorCode::EmptyDataset);
  CHECK(error_code_of([&] { vbmi::load_csv(dir.file("absent.csv"), two_vars(), "cluster"); }) ==
        ErrorCode::IoFailure);
}

TEST_CASE("quoted fields and integer category codes") {
  testutil::TempDir dir("quoted");
  const auto path = dir.file("q.csv");
  testutil::write_file(path, "\"cluster\",\"x\",\"k\"\n\"a,b\",\"4.25\",2\n\"a,b\",1e-3,NA\n");
  const auto d = vbmi::load_csv(path, {VariableSpec::continuous("x"), VariableSpec::categorical("k", 3)}, "cluster");
  CHECK(d.cluster_ids() == std::vector<std::string>{"a,b"});
  CHECK(d.value(0, 0) == 4.25);
  CHECK(d.value(1, 0) == 1e-3);
  CHECK(d.value(0, 1) == 2.0);
  CHECK(d.missing(1, 1));
}

TEST_CASE("missing_ratio examples") {
  testutil::TempDir dir("ratio");
  const auto path = dir.file("r.csv");
  std::string text = "cluster,v1,v2,v3\n";
  for (int i = 0; i < 10; ++i)
    text += std::to_string(i % 3) + "," + (i < 3 ? "NA" : std::to_string(i)) + ",1,NA\n";
  testutil::write_file(path, text);
  const auto d = vbmi::load_csv(
      path, {VariableSpec::continuous("v1"), VariableSpec::continuous("v2"), VariableSpec::continuous("v3")},
      "cluster");
  CHECK(vbmi::missing_ratio(d, 0) == doctest::Approx(0.3));
  CHECK(vbmi::missing_ratio(d, 1) == 0.0);
  CHECK(vbmi::missing_ratio(d, 2) == 1.0);
}

TEST_CASE("missing ratios account for every masked cell") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto d = random_dataset(seed);
    double total = 0.0;
    for (std::size_t k = 0; k < d.cols(); ++k) total += vbmi::missing_ratio(d, k) * static_cast<double>(d.rows());
    CHECK(std::llround(total) == static_cast<long long>(d.missing_count()));
  }
}

TEST_CASE("write then load is the identity") {
  testutil::TempDir dir("roundtrip");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    const auto d = random_dataset(seed);
    const auto path = dir.file("rt.csv");
    vbmi::write_csv(d, path);
    const auto back = vbmi::load_csv(path, d.schema());
    CHECK(back.cluster_ids() == d.cluster_ids());
    CHECK(back.cluster_sizes() == d.cluster_sizes());
    CHECK(same_cells(back, d));
  }
}

TEST_CASE("masked cells are written as the NA token") {
  testutil::TempDir dir("na");
  const auto path = dir.file("na.csv");
  testutil::write_file(path, "cluster,x,g\n1,NA,yes\n");
  const auto d = vbmi::load_csv(path, two_vars(), "cluster");
  const auto out = dir.file("out.csv");
  vbmi::write_csv(d, out);
  CHECK(testutil::read_file(out) == "cluster,x,g\n1,NA,yes\n");
}

TEST_CASE("write_csv to an unwritable path fails") {
  const auto d = random_dataset(1);
  CHECK(error_code_of([&] { vbmi::write_csv(d, "/nonexistent_dir_vbmi/x.csv"); }) == ErrorCode::IoFailure);
}

TEST_CASE("format_double round trips") {
  vbmi::RngStream rng(4, 4);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::exp(20.0 * rng.normal());
    CHECK(std::stod(vbmi::format_double(v)) == v);
  }
}

TEST_CASE("extract_regression_view dimensions and masks") {
  std::vector<VariableSpec> vars = {VariableSpec::continuous("a"), VariableSpec::continuous("b"),
                                    VariableSpec::continuous("c")};
  Eigen::MatrixXd values(4, 3);
  values << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  vbmi::BoolMatrix mask = vbmi::BoolMatrix::Constant(4, 3, false);
  mask(2, 1) = true;
  values(2, 1) = vbmi::kMissing;
  const vbmi::ClusteredDataset d({"x", "y"}, {3, 1}, vars, values, mask);

  const auto v = vbmi::extract_regression_view(d, 1);
  CHECK(v.design.p() == 3);
  CHECK(v.design.l() == 1);
  CHECK(v.design.X.col(0).isOnes());
  CHECK(v.design.Z.isOnes());
  CHECK(v.missing_rows == std::vector<std::size_t>{2});
  CHECK(std::isnan(v.y(2)));
  CHECK(v.design.cluster_offsets == std::vector<std::size_t>{0, 3, 4});

  vbmi::ViewOptions no_icpt;
  no_icpt.intercept = false;
  CHECK(vbmi::extract_regression_view(d, 1, no_icpt).design.p() == 2);

  const auto v0 = vbmi::extract_regression_view(vbmi::ClusteredDataset({"x"}, {4}, vars, [&] {
    Eigen::MatrixXd full = values;
    full(2, 1) = 1.0;
    return full;
  }(), vbmi::BoolMatrix::Constant(4, 3, false)), 2);
  CHECK(v0.missing_rows.empty());

  CHECK(error_code_of([&] { vbmi::extract_regression_view(d, 0); }) == ErrorCode::UnfilledCovariate);
}

TEST_CASE("dummy coding expands categorical covariates") {
  std::vector<VariableSpec> vars = {VariableSpec::continuous("y"), VariableSpec::categorical("g", 3)};
  Eigen::MatrixXd values(3, 2);
  values << 0.5, 1, 1.5, 2, 2.5, 3;
  const vbmi::ClusteredDataset d({"c"}, {3}, vars, values, vbmi::BoolMatrix::Constant(3, 2, false));
  vbmi::ViewOptions opt;
  opt.dummy_code = true;
  const auto v = vbmi::extract_regression_view(d, 0, opt);
  REQUIRE(v.design.p() == 3);
  CHECK(v.design.X(0, 1) == 0.0);
  CHECK(v.design.X(1, 1) == 1.0);
  CHECK(v.design.X(2, 2) == 1.0);
}
