#include "kcf/bench.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "kcf/baselines.hpp"
#include "kcf/errors.hpp"
#include "kcf/estimator.hpp"
#include "kcf/random.hpp"

namespace kcf {

TargetProblem make_problem(const ProblemSpec& spec) {
  if (spec.target == "gaussian") return gaussian_problem(spec.dimension, spec.integrand);
  if (spec.target == "mixture") {
    if (spec.dimension != 1) throw InvalidInput("mixture targets are one-dimensional");
    return mixture_problem(spec.weights, spec.means, spec.scales, spec.integrand);
  }
  throw InvalidInput(fmt::format("unknown target '{}' (expected gaussian or mixture)", spec.target));
}

std::uint64_t dataset_seed(std::uint64_t master_seed, std::size_t n, std::size_t replication) noexcept {
  return derive_seed(master_seed, {stream::kDataset, n, replication});
}

SlopeFit estimate_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logs;
  SlopeFit fit;
  for (const auto& [n, mse] : points) {
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidInput(fmt::format("sample size must be positive, got {}", n));
    }
    if (!(mse > 0.0) || !std::isfinite(mse)) {
      ++fit.excluded;
      continue;
    }
    logs.emplace_back(std::log(n), std::log(mse));
  }
  if (logs.size() < 3) {
    throw InvalidInput(fmt::format("slope needs at least 3 points with positive MSE, have {}", logs.size()));
  }
  const auto k = static_cast<double>(logs.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("slope needs at least two distinct sample sizes");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [x, y] : logs) {
    const double r = y - fit.intercept - fit.slope * x;
    rss += r * r;
  }
  fit.standard_error = std::sqrt(rss / (k - 2.0) / sxx);
  fit.used = logs.size();
  return fit;
}

Estimate run_method(const MethodSpec& spec, const ScoredDataset& data, const TargetProblem& problem,
                    const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = data.size();
  switch (spec.method) {
    case Method::Mean: {
      Estimate est;
      est.method = Method::Mean;
      est.value = arithmetic_mean({data.f_values().data(), n});
      est.m = n;
      est.n = n;
      return est;
    }
    case Method::Zv1:
      return zv_estimate(data, 1);
    case Method::Zv2:
      return zv_estimate(data, 2);
    case Method::Riemann: {
      Estimate est;
      est.method = Method::Riemann;
      est.value = riemann_1d(data, problem.density);
      est.m = n;
      est.n = n;
      return est;
    }
    case Method::CfSplit:
    case Method::CfSimplified:
    case Method::CfMultisplit:
      break;
  }

  const std::size_t m = spec.method == Method::CfSimplified ? n : split_size(n, config.split_fraction);
  const SplitPlan plan = spec.method == Method::CfSimplified ? SplitPlan::leading(n, n)
                                                             : multisplit_plan(n, m, seed, 0);
  SteinKernelParams params = spec.params;
  if (!spec.cv_grid.empty()) {
    // Selection only looks at D0 so the split estimator stays unbiased.
    params = cross_validate(data.subset(plan.index_d0), spec.cv_grid, spec.cv_train_fraction, seed)
                 .best;
  }
  if (spec.method == Method::CfSimplified) return cf_simplified_estimate(data, params, spec.lambda);
  if (spec.method == Method::CfSplit) return cf_split_estimate(data, plan, params, spec.lambda);
  return cf_multisplit_estimate(data, config.n_splits, config.split_fraction, params, seed, spec.lambda);
}

namespace {

CellSummary summarise(std::size_t n, const std::vector<double>& values, std::size_t replications,
                      double truth) {
  CellSummary cell;
  cell.n = n;
  cell.successes = values.size();
  cell.failures = replications - values.size();
  cell.flagged = 10 * cell.failures > replications;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.mean = cell.bias = cell.variance = cell.mse = cell.n_mse = nan;
    return cell;
  }
  const auto k = static_cast<double>(values.size());
  double sum = 0.0;
  for (const double v : values) sum += v;
  cell.mean = sum / k;
  double ss = 0.0;
  double se = 0.0;
  for (const double v : values) {
    ss += (v - cell.mean) * (v - cell.mean);
    se += (v - truth) * (v - truth);
  }
  cell.bias = cell.mean - truth;
  cell.variance = ss / k;
  cell.mse = se / k;
  cell.n_mse = static_cast<double>(n) * cell.mse;
  return cell;
}

}  // namespace

ConvergenceReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const TargetProblem problem = make_problem(config.problem);

  ConvergenceReport report;
  report.config = config;
  report.problem_name = problem.name;
  report.true_mean = oracle_mean(problem);

  const std::size_t reps = config.replications;
  const std::size_t n_methods = config.methods.size();
  const std::size_t tasks = config.n_grid.size() * reps;
  report.records.resize(tasks * n_methods);

  auto run_task = [&](std::size_t t) {
    const std::size_t ni = t / reps;
    const std::size_t rep = t % reps;
    const std::size_t n = config.n_grid[ni];
    const std::uint64_t seed = dataset_seed(config.master_seed, n, rep);
    Rng rng(seed);
    const ScoredDataset data = problem.draw(rng, n);
    for (std::size_t k = 0; k < n_methods; ++k) {
      RunRecord& rec = report.records[t * n_methods + k];
      rec.method = k;
      rec.n = n;
      rec.replication = rep;
      rec.seed = seed;
      try {
        const Estimate est = run_method(config.methods[k], data, problem, config, seed);
        rec.estimate = est.value;
        if (is_control_functional(est.method)) rec.lambda_used = est.lambda_used;
        if (!std::isfinite(rec.estimate)) throw NumericalError("non-finite estimate");
      } catch (const std::exception& e) {
        rec.estimate = std::numeric_limits<double>::quiet_NaN();
        rec.lambda_used.reset();
        rec.error = e.what();
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, tasks));
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Aggregation runs in fixed (n, replication) order whatever the thread count.
  for (std::size_t k = 0; k < n_methods; ++k) {
    MethodSummary summary;
    summary.label = config.methods[k].label;
    summary.method = config.methods[k].method;
    std::vector<std::pair<double, double>> points;
    for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
      std::vector<double> values;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const RunRecord& rec = report.records[(ni * reps + rep) * n_methods + k];
        if (rec.error.empty()) values.push_back(rec.estimate);
      }
      summary.cells.push_back(summarise(config.n_grid[ni], values, reps, report.true_mean));
      if (!values.empty()) {
        points.emplace_back(static_cast<double>(config.n_grid[ni]), summary.cells.back().mse);
      }
    }
    try {
      summary.slope = estimate_slope(points);
      if (summary.slope->excluded > 0) {
        summary.slope_note = fmt::format("{} cells with zero MSE excluded", summary.slope->excluded);
      }
    } catch (const InvalidInput& e) {
      summary.slope_note = e.what();
    }
    report.methods.push_back(std::move(summary));
  }
  return report;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void write_records_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "method,n,replication,estimate,lambda_used,seed\n";
  for (const RunRecord& rec : report.records) {
    out << report.config.methods[rec.method].label << ',' << rec.n << ',' << rec.replication << ','
        << format_double(rec.estimate) << ','
        << (rec.lambda_used ? format_double(*rec.lambda_used) : std::string()) << ',' << rec.seed
        << '\n';
  }
}

nlohmann::json report_to_json(const ConvergenceReport& report) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = report.config.name;
  j["problem"] = report.problem_name;
  j["true_mean"] = report.true_mean;
  j["replications"] = report.config.replications;
  j["master_seed"] = report.config.master_seed;
  j["n_grid"] = report.config.n_grid;
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodSummary& m : report.methods) {
    nlohmann::json jm;
    jm["label"] = m.label;
    jm["method"] = std::string(method_name(m.method));
    if (m.slope) {
      jm["slope"] = m.slope->slope;
      jm["slope_stderr"] = m.slope->standard_error;
      jm["slope_points"] = m.slope->used;
    } else {
      jm["slope"] = nullptr;
      jm["slope_stderr"] = nullptr;
      jm["slope_points"] = 0;
    }
    if (!m.slope_note.empty()) jm["slope_note"] = m.slope_note;
    nlohmann::json cells = nlohmann::json::array();
    for (const CellSummary& c : m.cells) {
      cells.push_back({{"n", c.n},
                       {"successes", c.successes},
                       {"failures", c.failures},
                       {"flagged", c.flagged},
                       {"mean", number_or_null(c.mean)},
                       {"bias", number_or_null(c.bias)},
                       {"variance", number_or_null(c.variance)},
                       {"mse", number_or_null(c.mse)},
                       {"n_mse", number_or_null(c.n_mse)}});
    }
    jm["cells"] = std::move(cells);
    methods.push_back(std::move(jm));
  }
  j["methods"] = std::move(methods);
  return j;
}

}  // namespace kcf
