#include "kcf/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "kcf/baselines.hpp"
#include "kcf/bench.hpp"
#include "kcf/diagnostics.hpp"
#include "kcf/errors.hpp"
#include "kcf/estimator.hpp"
#include "kcf/sample_file.hpp"
#include "kcf/targets.hpp"

namespace kcf::cli {
namespace {

constexpr int kJsonSchemaVersion = 1;

// Raised for flag combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimateOptions {
  std::string input;
  std::string method = "cf-simplified";
  double alpha1 = 0.1;
  double alpha2 = 1.0;
  std::string cv_grid;
  double cv_train_fraction = 0.5;
  double split_fraction = 0.5;
  std::size_t splits = 1;
  std::uint64_t seed = 0;
  std::string lambda = "auto";
  std::string output = "text";
  bool bound = false;
  double fnorm = 0.0;
};

struct BenchOptions {
  std::string config;
  std::string out_dir = ".";
  std::size_t threads = 1;
  bool dry_run = false;
  bool emit_samples = false;
  std::size_t emit_replications = 1;
};

struct DiagnoseOptions {
  std::string target = "gaussian";
  std::size_t dim = 1;
  double alpha1 = 0.1;
  double alpha2 = 1.0;
  std::size_t samples = 200;
  std::size_t probes = 10;
  std::uint64_t seed = 1;
};

std::vector<SteinKernelParams> read_cv_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SampleFileError(0, fmt::format("cannot open CV grid file '{}'", path));
  std::vector<SteinKernelParams> grid;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first) || first.front() == '#') continue;
    SteinKernelParams p;
    std::string rest;
    try {
      std::size_t used = 0;
      p.alpha1 = std::stod(first, &used);
      if (used != first.size() || !(fields >> p.alpha2) || (fields >> rest)) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw SampleFileError(lineno, "CV grid rows must be 'alpha1 alpha2'");
    }
    grid.push_back(p);
  }
  if (grid.empty()) throw SampleFileError(0, fmt::format("CV grid file '{}' has no entries", path));
  return grid;
}

int cmd_estimate(const EstimateOptions& o, const CLI::App& sub, std::ostream& out) {
  const auto method = parse_method(o.method);
  if (!method || *method == Method::Riemann) {
    throw UsageError(fmt::format("unknown method '{}' (cf-split, cf-simplified, cf-multisplit, mean, zv1, zv2)",
                                 o.method));
  }
  const bool cf = is_control_functional(*method);
  const auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (!cf) {
    for (const char* flag : {"--alpha1", "--alpha2", "--cv-grid", "--lambda", "--split-fraction", "--splits",
                             "--seed", "--cv-train-fraction"}) {
      if (given(flag)) throw UsageError(fmt::format("{} only applies to control-functional methods", flag));
    }
  }
  if (given("--splits") && *method != Method::CfMultisplit) {
    throw UsageError("--splits requires --method cf-multisplit");
  }
  if (o.bound != given("--fnorm")) throw UsageError("--bound and --fnorm must be given together");
  if (o.bound && *method != Method::CfSplit && *method != Method::CfSimplified) {
    throw UsageError("--bound is available for cf-split and cf-simplified");
  }
  if (o.bound && !(o.fnorm >= 0.0 && std::isfinite(o.fnorm))) {
    throw UsageError("--fnorm must be a non-negative number");
  }
  std::optional<double> lambda;
  if (o.lambda != "auto") {
    try {
      std::size_t used = 0;
      lambda = std::stod(o.lambda, &used);
      if (used != o.lambda.size() || !(*lambda >= 0.0)) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--lambda must be 'auto' or a non-negative number, got '{}'", o.lambda));
    }
  }

  const ScoredDataset data = read_sample_file(o.input);
  const std::size_t n = data.size();
  SteinKernelParams params{o.alpha1, o.alpha2};
  params.validate();

  Estimate est;
  std::optional<std::size_t> cv_choice;
  if (!cf) {
    if (*method == Method::Mean) {
      est.method = Method::Mean;
      est.value = arithmetic_mean({data.f_values().data(), n});
      est.m = est.n = n;
    } else {
      est = zv_estimate(data, *method == Method::Zv1 ? 1 : 2);
    }
  } else {
    SplitPlan plan = SplitPlan::leading(n, n);
    if (*method != Method::CfSimplified) {
      const std::size_t m = split_size(n, o.split_fraction);
      if (m >= n) {
        throw InvalidInput(fmt::format("split fraction {} leaves no evaluation samples for n={}",
                                       o.split_fraction, n));
      }
      plan = multisplit_plan(n, m, o.seed, 0);
    }
    if (!o.cv_grid.empty()) {
      const auto grid = read_cv_grid(o.cv_grid);
      const auto cv = cross_validate(data.subset(plan.index_d0), grid, o.cv_train_fraction, o.seed);
      params = cv.best;
      cv_choice = cv.best_index;
    }
    switch (*method) {
      case Method::CfSimplified:
        est = cf_simplified_estimate(data, params, lambda);
        break;
      case Method::CfSplit:
        est = cf_split_estimate(data, plan, params, lambda);
        break;
      default:
        est = cf_multisplit_estimate(data, o.splits, o.split_fraction, params, o.seed, lambda);
        break;
    }
  }

  std::optional<double> radius;
  if (o.bound && est.discrepancy) radius = std::sqrt(*est.discrepancy) * o.fnorm;

  if (o.output == "json") {
    nlohmann::json j;
    j["schema_version"] = kJsonSchemaVersion;
    j["method"] = std::string(method_name(est.method));
    j["value"] = est.value;
    j["n"] = est.n;
    j["m"] = est.m;
    if (cf) {
      j["lambda"] = est.lambda_used;
      j["alpha1"] = params.alpha1;
      j["alpha2"] = params.alpha2;
      if (cv_choice) j["cv_grid_index"] = *cv_choice;
    }
    if (est.term_star) j["term_star"] = *est.term_star;
    if (est.term_star_star) j["term_star_star"] = *est.term_star_star;
    if (est.n_splits) j["n_splits"] = *est.n_splits;
    if (o.bound && est.discrepancy) {
      j["discrepancy"] = *est.discrepancy;
      j["fnorm"] = o.fnorm;
      j["error_bound"] = *radius;
    }
    out << j.dump(2) << '\n';
  } else {
    out << fmt::format("method: {}\n", method_name(est.method));
    out << fmt::format("value: {:.17g}\n", est.value);
    if (cf) {
      out << fmt::format("lambda: {:g}\n", est.lambda_used);
      out << fmt::format("alpha1: {:g}\nalpha2: {:g}\n", params.alpha1, params.alpha2);
    }
    out << fmt::format("m: {}\nn: {}\n", est.m, est.n);
    if (est.n_splits) out << fmt::format("splits: {}\n", *est.n_splits);
    if (o.bound && est.discrepancy) {
      out << fmt::format("discrepancy: {:.17g}\n", *est.discrepancy);
      out << fmt::format("error_bound: {:.17g}\n", *radius);
    }
  }
  return kSuccess;
}

ExperimentConfig load_config(const std::string& spec) {
  if (auto builtin = builtin_config(spec)) return *builtin;
  std::ifstream in(spec);
  if (!in) {
    std::string names;
    for (const auto& s : builtin_config_names()) names += " " + s;
    throw UsageError(fmt::format("config '{}' is neither a readable file nor a bundled config (bundled:{})",
                                 spec, names));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(fmt::format("config '{}' is not valid JSON: {}", spec, e.what()));
  }
  return parse_experiment_config(j);
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  const ExperimentConfig config = load_config(o.config);
  config.validate();
  if (o.dry_run) {
    out << fmt::format("config '{}' is valid: {} sizes x {} replications x {} methods = {} cells\n",
                       config.name, config.n_grid.size(), config.replications, config.methods.size(),
                       config.cell_count());
    return kSuccess;
  }
  if (o.threads < 1) throw UsageError("--threads must be at least 1");

  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  const ConvergenceReport report = run_experiment(config, {o.threads});

  const auto csv_path = dir / (config.name + "_records.csv");
  const auto json_path = dir / (config.name + "_summary.json");
  {
    std::ofstream csv(csv_path, std::ios::binary);
    write_records_csv(csv, report);
    std::ofstream js(json_path, std::ios::binary);
    js << report_to_json(report).dump(2) << '\n';
    if (!csv || !js) throw Error(fmt::format("failed to write reports to '{}'", dir.string()));
  }
  if (o.emit_samples) {
    const TargetProblem problem = make_problem(config.problem);
    const auto sample_dir = dir / (config.name + "_samples");
    std::filesystem::create_directories(sample_dir);
    for (const std::size_t n : config.n_grid) {
      for (std::size_t r = 0; r < std::min(o.emit_replications, config.replications); ++r) {
        Rng rng(dataset_seed(config.master_seed, n, r));
        write_sample_file(sample_dir / fmt::format("n{}_r{}.csv", n, r), problem.draw(rng, n));
      }
    }
  }

  out << fmt::format("{} (true mean {:g}, {} replications)\n", report.problem_name, report.true_mean,
                     config.replications);
  for (const MethodSummary& m : report.methods) {
    if (m.slope) {
      out << fmt::format("  {:<16} slope {:+.3f} +/- {:.3f}\n", m.label, m.slope->slope,
                         m.slope->standard_error);
    } else {
      out << fmt::format("  {:<16} slope n/a ({})\n", m.label, m.slope_note);
    }
    for (const CellSummary& c : m.cells) {
      if (c.flagged) {
        out << fmt::format("    warning: n={} failed in {} of {} replications\n", c.n, c.failures,
                           config.replications);
      }
    }
  }
  out << fmt::format("wrote {} and {}\n", csv_path.string(), json_path.string());
  return kSuccess;
}

int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  TargetProblem problem;
  if (o.target == "gaussian") {
    problem = gaussian_problem(o.dim);
  } else if (o.target == "mixture") {
    if (o.dim != 1) throw UsageError("the mixture target is one-dimensional");
    problem = mixture_problem({0.5, 0.5}, {-1.0, 1.0}, {0.5, 0.5});
  } else {
    throw UsageError(fmt::format("unknown target '{}' (expected gaussian or mixture)", o.target));
  }
  const SteinKernelParams params{o.alpha1, o.alpha2};
  params.validate();
  bool ok = true;

  out << fmt::format("target: {}\nalpha1: {:g}\nalpha2: {:g}\n", problem.name, params.alpha1, params.alpha2);
  if (problem.dimension == 1) {
    out << "mean-element residuals (should vanish):\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < o.probes; ++i) {
      const double x = o.probes == 1 ? 0.0 : -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(o.probes - 1);
      const double r = mean_element({&x, 1}, problem, params);
      worst = std::max(worst, std::abs(r));
      out << fmt::format("  x = {:+.4f}  residual = {:+.3e}\n", x, r);
    }
    out << fmt::format("max mean-element residual: {:.3e}\n", worst);
    ok = ok && worst < 1e-8;
  } else {
    out << "mean-element residuals: skipped (quadrature check is one-dimensional)\n";
  }
  const double grad = max_gradient_error(problem.dimension, 100, o.seed);
  out << fmt::format("max kernel-gradient relative error: {:.3e}\n", grad);
  ok = ok && grad < 1e-6;

  Rng rng(o.seed);
  const ScoredDataset data = problem.draw(rng, o.samples);
  out << fmt::format("sampled sup k0(x,x) over {} draws: {:.6g}\n", o.samples,
                     sampled_sup_diagonal(data, params));
  out << fmt::format("status: {}\n", ok ? "ok" : "FAILED");
  return ok ? kSuccess : kNumericalFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel control functionals for Monte Carlo integration", "kcf"};
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Estimate an expectation from a sample file");
  estimate->add_option("input", est.input, "Sample table (x_1..x_d, f, u_1..u_d)")->required();
  estimate->add_option("--method", est.method, "cf-split|cf-simplified|cf-multisplit|mean|zv1|zv2")
      ->capture_default_str();
  estimate->add_option("--alpha1", est.alpha1, "Kernel decay parameter")->capture_default_str();
  estimate->add_option("--alpha2", est.alpha2, "Kernel length-scale")->capture_default_str();
  estimate->add_option("--cv-grid", est.cv_grid, "File of 'alpha1 alpha2' rows to cross-validate over");
  estimate->add_option("--cv-train-fraction", est.cv_train_fraction, "Training share of D0 in CV")
      ->capture_default_str();
  estimate->add_option("--split-fraction", est.split_fraction, "Share of samples in D0")
      ->capture_default_str();
  estimate->add_option("--splits", est.splits, "Number of random splits (cf-multisplit)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  estimate->add_option("--seed", est.seed, "Seed for splits and CV")->capture_default_str();
  estimate->add_option("--lambda", est.lambda, "'auto' or a fixed regulariser")->capture_default_str();
  estimate->add_option("--output", est.output, "text|json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));
  estimate->add_flag("--bound", est.bound, "Report discrepancy and the error radius sqrt(D)*fnorm");
  estimate->add_option("--fnorm", est.fnorm, "Assumed H+ norm of the integrand (with --bound)");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a replicated convergence study");
  bench_cmd->add_option("config", bench.config, "JSON config file or bundled name (paper_d1, paper_d3, paper_d5)")
      ->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "Directory for reports")->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (results do not depend on it)")
      ->capture_default_str();
  bench_cmd->add_flag("--dry-run", bench.dry_run, "Validate the config and print the cell count");
  bench_cmd->add_flag("--emit-samples", bench.emit_samples, "Also write sample tables for each n");
  bench_cmd->add_option("--emit-replications", bench.emit_replications, "Replications per n to emit")
      ->capture_default_str();

  DiagnoseOptions diag;
  auto* diagnose = app.add_subcommand("diagnose", "Check kernel identities on a built-in target");
  diagnose->add_option("--target", diag.target, "gaussian|mixture")->capture_default_str();
  diagnose->add_option("--dim", diag.dim, "Dimension (gaussian)")->capture_default_str()->check(CLI::PositiveNumber);
  diagnose->add_option("--alpha1", diag.alpha1, "Kernel decay parameter")->capture_default_str();
  diagnose->add_option("--alpha2", diag.alpha2, "Kernel length-scale")->capture_default_str();
  diagnose->add_option("--samples", diag.samples, "Draws for the sup k0(x,x) report")->capture_default_str();
  diagnose->add_option("--probes", diag.probes, "Mean-element probe points")->capture_default_str();
  diagnose->add_option("--seed", diag.seed, "Seed")->capture_default_str();

  std::vector<std::string> storage{"kcf"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*estimate) return cmd_estimate(est, *estimate, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    return cmd_diagnose(diag, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    CLI::App* active = *estimate ? estimate : *bench_cmd ? bench_cmd : diagnose;
    err << active->help();
    return kUsageError;
  } catch (const SingularMatrix& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace kcf::cli
