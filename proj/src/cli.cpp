#include "vbmi/cli.hpp"

#include <glob.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "vbmi/error.hpp"
#include "vbmi/imputer.hpp"
#include "vbmi/json_io.hpp"
#include "vbmi/kernels.hpp"
#include "vbmi/pooling.hpp"
#include "vbmi/simstudy.hpp"

namespace vbmi::cli {

namespace {

struct Globals {
  std::uint64_t seed = 42;
  int threads = 0;
  std::string config;
  bool verbose = false;
};

json load_config(const Globals& g) { return g.config.empty() ? json::object() : read_json_file(g.config); }

void apply_threads(const Globals& g) {
  int n = g.threads;
  if (n <= 0) {
    if (const char* env = std::getenv("VBIMPUTE_THREADS")) n = std::atoi(env);
  }
  kernels::set_threads(n);
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  return out;
}

struct FitArgs {
  std::string data, schema, response, out, trace;
};

int cmd_fit(const Globals& g, const FitArgs& a, std::ostream& out, std::ostream& err) {
  const Schema schema = load_schema(a.schema);
  const ClusteredDataset data = load_csv(a.data, schema);
  const json cfg = load_config(g);
  const std::size_t k = data.index_of(a.response);
  ViewOptions vo;
  if (cfg.contains("view")) {
    vo.intercept = cfg["view"].value("intercept", vo.intercept);
    vo.standardize = cfg["view"].value("standardize", vo.standardize);
    vo.dummy_code = cfg["view"].value("dummy_code", vo.dummy_code);
  }
  const RegressionView view = extract_regression_view(data, k, vo);
  const Hyperparameters hyper = hyper_from_json(cfg.value("hyper", json::object()), view.design.l());
  FitOptions fo;
  fo.seed = g.seed;
  fo = fit_options_from_json(cfg.value("fit", json::object()), fo);
  const FitResult res = fit(view, hyper, fo);
  json doc{{"response", a.response},
           {"columns", json::array()},
           {"state", to_json(res.state)},
           {"diagnostics", to_json(res.diagnostics)},
           {"hyper", to_json(hyper)},
           {"fit_options", to_json(fo)}};
  if (vo.intercept) doc["columns"].push_back("(Intercept)");
  for (std::size_t j = 0; j < data.cols(); ++j)
    if (j != k) doc["columns"].push_back(data.variable(j).name);
  write_text_file(a.out, doc.dump(2) + "\n");
  if (!a.trace.empty()) {
    std::string csv = "iteration,metric\n";
    for (std::size_t i = 0; i < res.diagnostics.trace.size(); ++i)
      csv += std::to_string(i + 1) + "," + format_double(res.diagnostics.trace[i]) + "\n";
    write_text_file(a.trace, csv);
  }
  if (g.verbose)
    err << "fit: " << res.diagnostics.iterations_run << " iterations, final change "
        << res.diagnostics.final_change << "\n";
  if (!res.diagnostics.converged) {
    err << "fit did not converge within " << fo.max_iters << " iterations (state written)\n";
    return kNotConverged;
  }
  out << "converged after " << res.diagnostics.iterations_run << " iterations\n";
  return kOk;
}

struct ImputeArgs {
  std::string data, schema, stem;
  int M = 5;
  int sweeps = 0;
};

int cmd_impute(const Globals& g, const ImputeArgs& a, std::ostream& out, std::ostream& err) {
  const Schema schema = load_schema(a.schema);
  const ClusteredDataset data = load_csv(a.data, schema);
  const json cfg = load_config(g);
  ImputationPlan plan = ImputationPlan::for_dataset(data, a.M, g.seed);
  plan.hyper = hyper_from_json(cfg.value("hyper", json::object()), 1);
  plan.fit_options = fit_options_from_json(cfg.value("fit", json::object()), plan.fit_options);
  plan.sweeps = cfg.value("sweeps", plan.sweeps);
  if (a.sweeps > 0) plan.sweeps = a.sweeps;
  if (cfg.contains("view")) {
    plan.view_options.intercept = cfg["view"].value("intercept", true);
    plan.view_options.standardize = cfg["view"].value("standardize", false);
    plan.view_options.dummy_code = cfg["view"].value("dummy_code", false);
  }
  const ImputationSet set = impute_dataset(data, plan);

  json manifest;
  manifest["source"] = std::filesystem::path(a.data).filename().string();
  manifest["M"] = a.M;
  manifest["base_seed"] = plan.base_seed;
  manifest["sweeps"] = plan.sweeps;
  json order = json::array();
  for (auto k : plan.variable_order)
    order.push_back({{"variable", data.variable(k).name}, {"missing_ratio", missing_ratio(data, k)}});
  manifest["variable_order"] = order;
  manifest["fit_options"] = to_json(plan.fit_options);
  manifest["hyper"] = to_json(plan.hyper);
  json copies = json::array();
  bool all_converged = true;
  for (int c = 0; c < a.M; ++c) {
    const std::string file = a.stem + ".imp" + std::to_string(c + 1) + ".csv";
    write_csv(set.copies[static_cast<std::size_t>(c)], file);
    json fits = json::array();
    const auto& diags = set.diagnostics[static_cast<std::size_t>(c)];
    for (std::size_t r = 0; r < diags.size(); ++r) {
      const std::size_t k = plan.variable_order[r % plan.variable_order.size()];
      fits.push_back({{"variable", data.variable(k).name},
                      {"converged", diags[r].converged},
                      {"iterations", diags[r].iterations_run},
                      {"final_change", diags[r].final_change}});
      all_converged = all_converged && diags[r].converged;
    }
    copies.push_back({{"file", std::filesystem::path(file).filename().string()},
                      {"stream_id", set.stream_ids[static_cast<std::size_t>(c)]},
                      {"fits", fits}});
  }
  manifest["copies"] = copies;
  manifest["all_converged"] = all_converged;
  write_text_file(a.stem + ".manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << a.M << " imputed copies with stem '" << a.stem << "'\n";
  if (!all_converged && g.verbose) err << "warning: some per-variable fits hit max_iters\n";
  return kOk;
}

struct PoolArgs {
  std::string copies, schema, analysis = "proportions", variable, original, prefix;
};

int cmd_pool(const Globals&, const PoolArgs& a, std::ostream& out, std::ostream&) {
  const Schema schema = load_schema(a.schema);
  const auto files = expand_glob(a.copies);
  if (files.size() < 2)
    throw Error(ErrorCode::TooFewImputations, "pattern '" + a.copies + "' matched " + std::to_string(files.size()) + " file(s)");
  std::vector<ClusteredDataset> copies;
  for (const auto& f : files) copies.push_back(load_csv(f, schema));
  const std::size_t k = schema.index_of(a.variable);
  std::string text;
  if (a.analysis == "proportions") {
    std::optional<ClusteredDataset> source;
    if (!a.original.empty()) source = load_csv(a.original, schema);
    const ProportionTable t = proportion_table(copies, source ? &*source : nullptr, k);
    text = format_table(t);
    if (!a.prefix.empty()) write_table_csv(t, a.prefix + ".csv");
  } else if (a.analysis == "regression") {
    const RegressionTable t = pooled_regression(copies, k);
    text = format_table(t);
    if (!a.prefix.empty()) write_table_csv(t, a.prefix + ".csv");
  } else {
    throw Error(ErrorCode::InvalidArgument, "analysis must be 'proportions' or 'regression'");
  }
  if (!a.prefix.empty()) write_text_file(a.prefix + ".txt", text);
  out << text;
  return kOk;
}

SimConfig study_config(const Globals& g) {
  json cfg = load_config(g);
  if (!cfg.contains("master_seed")) cfg["master_seed"] = g.seed;
  return sim_config_from_json(cfg);
}

int cmd_simulate(const Globals& g, const std::string& stem, std::ostream& out) {
  const SimConfig config = study_config(g);
  RngStream gen(config.master_seed, 1);
  SimData data = generate(config, gen);
  RngStream mrng(config.master_seed, 2);
  const MarMask mask = gen_mar_mask(data.X.col(0), config, mrng);
  const ClusteredDataset complete = data.to_dataset(config.scenario, config.K);
  for (Eigen::Index r = 0; r < data.y.size(); ++r)
    if (mask.missing[static_cast<std::size_t>(r)]) data.y(r) = kMissing;
  const ClusteredDataset masked = data.to_dataset(config.scenario, config.K);
  write_csv(masked, stem + ".csv");
  write_csv(complete, stem + ".complete.csv");
  save_schema(masked.schema(), stem + ".schema.json");
  out << "wrote '" << stem << ".csv' (" << masked.rows() << " rows, missing rate "
      << format_double(mask.achieved_rate) << ")\n";
  return kOk;
}

int cmd_study(const Globals& g, const std::string& dir, bool timings, std::ostream& out) {
  const SimConfig config = study_config(g);
  const SimReport report = run_study(config);
  std::filesystem::create_directories(dir);
  report.write_csv((std::filesystem::path(dir) / "replicates.csv").string(), false);
  if (timings) report.write_csv((std::filesystem::path(dir) / "replicates_timed.csv").string(), true);
  const std::string summary = report.summary_json();
  write_text_file((std::filesystem::path(dir) / "summary.json").string(), summary);
  out << summary;
  const double fail_rate = static_cast<double>(report.failures()) / config.replicates;
  return fail_rate <= 0.05 ? kOk : kPartialFailure;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational Bayes multiple imputation for clustered data"};
  app.footer(
      "Exit codes: 0 ok, 1 usage or data error, 2 fit did not converge,\n"
      "3 more than 5% of study replicates failed.\n"
      "VBIMPUTE_THREADS sets the worker count when --threads is absent.");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->default_val(42);
  app.add_option("--threads", g.threads, "Worker threads (0 = environment/default)");
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_flag("--verbose", g.verbose, "Print diagnostics to stderr");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the variational model for one response");
  fit_cmd->add_option("--data", fa.data, "Input CSV")->required();
  fit_cmd->add_option("--schema", fa.schema, "Schema JSON")->required();
  fit_cmd->add_option("--response", fa.response, "Response variable name")->required();
  fit_cmd->add_option("--out", fa.out, "Output state JSON")->required();
  fit_cmd->add_option("--trace", fa.trace, "Optional CSV of the convergence trace");

  ImputeArgs ia;
  auto* imp_cmd = app.add_subcommand("impute", "Create M completed copies");
  imp_cmd->add_option("--data", ia.data, "Input CSV")->required();
  imp_cmd->add_option("--schema", ia.schema, "Schema JSON")->required();
  imp_cmd->add_option("--m-copies", ia.M, "Number of copies")->default_val(5)->check(CLI::PositiveNumber);
  imp_cmd->add_option("--out-stem", ia.stem, "Output path stem")->required();
  imp_cmd->add_option("--sweeps", ia.sweeps, "Sequential sweeps per copy")->check(CLI::NonNegativeNumber);

  PoolArgs pa;
  auto* pool_cmd = app.add_subcommand("pool", "Pool analyses over completed copies");
  pool_cmd->add_option("--copies", pa.copies, "Glob matching the copies")->required();
  pool_cmd->add_option("--schema", pa.schema, "Schema JSON")->required();
  pool_cmd->add_option("--analysis", pa.analysis, "proportions or regression")
      ->check(CLI::IsMember({"proportions", "regression"}));
  pool_cmd->add_option("--variable", pa.variable, "Variable to analyse")->required();
  pool_cmd->add_option("--original", pa.original, "Incomplete source CSV (ad-hoc column, missing rate)");
  pool_cmd->add_option("--out-prefix", pa.prefix, "Write <prefix>.csv and <prefix>.txt");

  std::string sim_stem;
  auto* sim_cmd = app.add_subcommand("simulate", "Write one synthetic incomplete dataset");
  sim_cmd->add_option("--out-stem", sim_stem, "Output path stem")->required();

  std::string study_dir;
  bool timings = false;
  auto* study_cmd = app.add_subcommand("study", "Run a simulation study");
  study_cmd->add_option("--out", study_dir, "Report directory")->required();
  study_cmd->add_flag("--timings", timings, "Also write per-replicate wall times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kError;
  }

  try {
    apply_threads(g);
    if (*fit_cmd) return cmd_fit(g, fa, out, err);
    if (*imp_cmd) return cmd_impute(g, ia, out, err);
    if (*pool_cmd) return cmd_pool(g, pa, out, err);
    if (*sim_cmd) return cmd_simulate(g, sim_stem, out);
    if (*study_cmd) return cmd_study(g, study_dir, timings, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace vbmi::cli
