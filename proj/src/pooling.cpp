#include "vbmi/pooling.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vbmi/error.hpp"
#include "vbmi/special.hpp"

namespace vbmi {

PooledEstimate pool_scalar(const std::vector<double>& estimates, const std::vector<double>& variances,
                           const PoolOptions& options) {
  const std::size_t M = estimates.size();
  if (M < 2) throw Error(ErrorCode::TooFewImputations, "pooling needs at least 2 imputations");
  if (variances.size() != M) throw Error(ErrorCode::DimensionMismatch, "estimate and variance counts differ");
  PooledEstimate out;
  out.M = static_cast<int>(M);
  const double dM = static_cast<double>(M);
  // Mean taken as a shift from the first estimate so identical estimates give B = 0 exactly.
  const double q0 = estimates[0];
  double shift = 0.0;
  for (std::size_t c = 0; c < M; ++c) {
    if (!(variances[c] >= 0)) throw Error(ErrorCode::InvalidArgument, "variances must be nonnegative");
    shift += estimates[c] - q0;
    out.W += variances[c];
  }
  out.qbar = q0 + shift / dM;
  out.W /= dM;
  for (double q : estimates) out.B += (q - out.qbar) * (q - out.qbar);
  out.B /= dM - 1.0;
  const double between = (1.0 + 1.0 / dM) * out.B;
  out.T = out.W + between;
  if (out.B > 0) {
    const double r = 1.0 + out.W / between;
    out.df = (dM - 1.0) * r * r;
    out.fmi = between / out.T;
    if (options.barnard_rubin && std::isfinite(options.complete_df)) {
      const double nu = options.complete_df;
      const double obs = (nu + 1.0) / (nu + 3.0) * nu * (1.0 - out.fmi);
      out.df = 1.0 / (1.0 / out.df + 1.0 / obs);
    }
  } else {
    out.df = std::numeric_limits<double>::infinity();
    out.fmi = 0.0;
    if (options.barnard_rubin && std::isfinite(options.complete_df)) out.df = options.complete_df;
  }
  const double half = t_critical(out.df, options.level) * std::sqrt(out.T);
  out.ci_low = out.qbar - half;
  out.ci_high = out.qbar + half;
  return out;
}

std::vector<PooledEstimate> pool_vector(const std::vector<std::vector<double>>& estimates,
                                        const std::vector<std::vector<double>>& variances,
                                        const PoolOptions& options) {
  const std::size_t M = estimates.size();
  if (M < 2) throw Error(ErrorCode::TooFewImputations, "pooling needs at least 2 imputations");
  if (variances.size() != M) throw Error(ErrorCode::DimensionMismatch, "estimate and variance counts differ");
  const std::size_t p = estimates.front().size();
  for (std::size_t c = 0; c < M; ++c)
    if (estimates[c].size() != p || variances[c].size() != p)
      throw Error(ErrorCode::DimensionMismatch, "per-copy vectors differ in length");
  std::vector<PooledEstimate> out;
  out.reserve(p);
  std::vector<double> q(M), u(M);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t c = 0; c < M; ++c) {
      q[c] = estimates[c][j];
      u[c] = variances[c][j];
    }
    out.push_back(pool_scalar(q, u, options));
  }
  return out;
}

ProportionTable proportion_table(const std::vector<ClusteredDataset>& copies, const ClusteredDataset* source,
                                 std::size_t k, const PoolOptions& options) {
  if (copies.size() < 2) throw Error(ErrorCode::TooFewImputations, "pooling needs at least 2 imputations");
  const ClusteredDataset& first = copies.front();
  if (k >= first.cols()) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
  const VariableSpec& spec = first.variable(k);
  if (!spec.is_categorical()) throw Error(ErrorCode::NotCategorical, "'" + spec.name + "' is not categorical");
  const int G = spec.categories;
  const double N = static_cast<double>(first.rows());

  std::vector<std::vector<double>> est(copies.size(), std::vector<double>(G)), var = est;
  for (std::size_t c = 0; c < copies.size(); ++c) {
    const auto& d = copies[c];
    if (d.rows() != first.rows() || d.cols() != first.cols())
      throw Error(ErrorCode::DimensionMismatch, "copies differ in shape");
    if (d.mask().col(k).any()) throw Error(ErrorCode::InvalidArgument, "copy still has missing cells");
    std::vector<double> count(G, 0.0);
    for (std::size_t r = 0; r < d.rows(); ++r) count[static_cast<std::size_t>(d.value(r, k)) - 1] += 1.0;
    for (int g = 0; g < G; ++g) {
      const double p = count[g] / N;
      est[c][g] = 100.0 * p;
      var[c][g] = 1e4 * p * (1.0 - p) / N;
    }
  }
  const auto pooled = pool_vector(est, var, options);

  const ClusteredDataset& base = source ? *source : first;
  std::vector<double> obs_count(G, 0.0);
  double n_obs = 0.0;
  for (std::size_t r = 0; r < base.rows(); ++r) {
    if (base.missing(r, k)) continue;
    obs_count[static_cast<std::size_t>(base.value(r, k)) - 1] += 1.0;
    n_obs += 1.0;
  }
  const double z = t_critical(std::numeric_limits<double>::infinity(), options.level);

  ProportionTable table;
  table.variable = spec.name;
  table.missing_rate = source ? 100.0 * missing_ratio(*source, k) : std::numeric_limits<double>::quiet_NaN();
  for (int g = 0; g < G; ++g) {
    ProportionRow row;
    row.label = spec.category_labels.empty() ? std::to_string(g + 1) : spec.category_labels[g];
    row.mi = pooled[g];
    const double p = n_obs > 0 ? obs_count[g] / n_obs : std::numeric_limits<double>::quiet_NaN();
    const double half = z * std::sqrt(p * (1.0 - p) / n_obs);
    row.adhoc = 100.0 * p;
    row.adhoc_low = 100.0 * (p - half);
    row.adhoc_high = 100.0 * (p + half);
    row.fmi_available = source != nullptr && table.missing_rate > 0.0;
    table.rows.push_back(row);
  }
  return table;
}

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = X.rows(), p = X.cols();
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
  if (n <= p) throw Error(ErrorCode::InvalidArgument, "least squares needs more rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw Error(ErrorCode::SingularSystem, "design matrix is rank deficient");
  OlsFit out;
  out.coef = qr.solve(y);
  out.df = static_cast<int>(n - p);
  out.sigma2 = (y - X * out.coef).squaredNorm() / static_cast<double>(out.df);
  Eigen::LLT<Eigen::MatrixXd> llt(X.transpose() * X);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "X^T X is not positive definite");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  out.var = out.sigma2 * inv.diagonal();
  return out;
}

RegressionTable pooled_regression(const std::vector<ClusteredDataset>& copies, std::size_t k,
                                  const PoolOptions& options) {
  if (copies.size() < 2) throw Error(ErrorCode::TooFewImputations, "pooling needs at least 2 imputations");
  const auto& first = copies.front();
  if (k >= first.cols()) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
  RegressionTable table;
  table.response = first.variable(k).name;
  table.terms.push_back("(Intercept)");
  for (std::size_t j = 0; j < first.cols(); ++j)
    if (j != k) table.terms.push_back(first.variable(j).name);
  std::vector<std::vector<double>> est, var;
  for (const auto& d : copies) {
    if (d.rows() != first.rows() || d.cols() != first.cols())
      throw Error(ErrorCode::DimensionMismatch, "copies differ in shape");
    if (d.missing_count() > 0) throw Error(ErrorCode::InvalidArgument, "copy still has missing cells");
    Eigen::MatrixXd X(d.rows(), d.cols());
    X.col(0).setOnes();
    for (std::size_t j = 0, c = 1; j < d.cols(); ++j)
      if (j != k) X.col(static_cast<Eigen::Index>(c++)) = d.values().col(j);
    const OlsFit f = ols(X, d.values().col(k));
    est.emplace_back(f.coef.data(), f.coef.data() + f.coef.size());
    var.emplace_back(f.var.data(), f.var.data() + f.var.size());
  }
  table.estimates = pool_vector(est, var, options);
  return table;
}

namespace {

std::string fmt(double v, int prec = 2) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w, bool left = false) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

std::string ci(double lo, double hi, int prec = 2) { return "(" + fmt(lo, prec) + ", " + fmt(hi, prec) + ")"; }

}  // namespace

std::string format_table(const ProportionTable& t) {
  std::ostringstream os;
  os << "Variable: " << t.variable << "   missing rate: " << fmt(t.missing_rate) << "%\n";
  std::size_t wl = 8;
  for (const auto& r : t.rows) wl = std::max(wl, r.label.size());
  os << pad("Category", wl, true) << "  " << pad("MI Mean", 8) << "  " << pad("MI 95% CI", 18) << "  "
     << pad("Ad-hoc Mean", 11) << "  " << pad("Ad-hoc 95% CI", 18) << "  " << pad("FMI%", 6) << "\n";
  for (const auto& r : t.rows) {
    os << pad(r.label, wl, true) << "  " << pad(fmt(r.mi.qbar), 8) << "  " << pad(ci(r.mi.ci_low, r.mi.ci_high), 18)
       << "  " << pad(fmt(r.adhoc), 11) << "  " << pad(ci(r.adhoc_low, r.adhoc_high), 18) << "  "
       << pad(r.fmi_available ? fmt(100.0 * r.mi.fmi, 1) : "NA", 6) << "\n";
  }
  os << "FMI = (1 + 1/M) B / T; Rubin degrees of freedom.\n";
  return os.str();
}

std::string format_table(const RegressionTable& t) {
  std::ostringstream os;
  os << "Response: " << t.response << "\n";
  std::size_t wl = 4;
  for (const auto& s : t.terms) wl = std::max(wl, s.size());
  os << pad("Term", wl, true) << "  " << pad("Estimate", 12) << "  " << pad("95% CI", 28) << "  " << pad("W", 10)
     << "  " << pad("B", 10) << "  " << pad("df", 10) << "  " << pad("FMI%", 6) << "\n";
  for (std::size_t j = 0; j < t.terms.size(); ++j) {
    const auto& e = t.estimates[j];
    os << pad(t.terms[j], wl, true) << "  " << pad(fmt(e.qbar, 4), 12) << "  " << pad(ci(e.ci_low, e.ci_high, 4), 28)
       << "  " << pad(fmt(e.W, 4), 10) << "  " << pad(fmt(e.B, 4), 10) << "  " << pad(fmt(e.df, 1), 10) << "  "
       << pad(fmt(100.0 * e.fmi, 1), 6) << "\n";
  }
  os << "FMI = (1 + 1/M) B / T; Rubin degrees of freedom.\n";
  return os.str();
}

void write_table_csv(const ProportionTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
  out << "variable,category,mi_mean,mi_low,mi_high,W,B,T,df,fmi_percent,adhoc_mean,adhoc_low,adhoc_high,missing_rate\n";
  for (const auto& r : t.rows) {
    out << t.variable << ',' << r.label << ',' << format_double(r.mi.qbar) << ',' << format_double(r.mi.ci_low) << ','
        << format_double(r.mi.ci_high) << ',' << format_double(r.mi.W) << ',' << format_double(r.mi.B) << ','
        << format_double(r.mi.T) << ',' << format_double(r.mi.df) << ','
        << (r.fmi_available ? format_double(100.0 * r.mi.fmi) : "NA") << ',' << format_double(r.adhoc) << ','
        << format_double(r.adhoc_low) << ',' << format_double(r.adhoc_high) << ','
        << (std::isnan(t.missing_rate) ? "NA" : format_double(t.missing_rate)) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

void write_table_csv(const RegressionTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
  out << "response,term,estimate,ci_low,ci_high,W,B,T,df,fmi_percent\n";
  for (std::size_t j = 0; j < t.terms.size(); ++j) {
    const auto& e = t.estimates[j];
    out << t.response << ',' << t.terms[j] << ',' << format_double(e.qbar) << ',' << format_double(e.ci_low) << ','
        << format_double(e.ci_high) << ',' << format_double(e.W) << ',' << format_double(e.B) << ','
        << format_double(e.T) << ',' << format_double(e.df) << ',' << format_double(100.0 * e.fmi) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

}  // namespace vbmi
