#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kcf/estimate.hpp"
#include "kcf/kernel.hpp"
#include "kcf/targets.hpp"

namespace kcf {

struct ProblemSpec {
  std::string target = "gaussian";  // "gaussian" or "mixture"
  std::size_t dimension = 1;
  std::string integrand = "sin";
  std::vector<double> weights;  // mixture only
  std::vector<double> means;
  std::vector<double> scales;
};

TargetProblem make_problem(const ProblemSpec& spec);

struct MethodSpec {
  std::string label;  // column value in reports; defaults to the method tag
  Method method = Method::Mean;
  SteinKernelParams params;
  /// When non-empty, kernel parameters are cross-validated on D0 per cell.
  std::vector<SteinKernelParams> cv_grid;
  double cv_train_fraction = 0.5;
  std::optional<double> lambda;  // nullopt: automatic selection
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  std::vector<MethodSpec> methods;
  std::uint64_t master_seed = 1;
  double split_fraction = 0.5;
  std::size_t n_splits = 1;

  /// Throws InvalidInput listing every problem found.
  void validate() const;
  std::size_t cell_count() const noexcept {
    return n_grid.size() * replications * methods.size();
  }
};

/// Parses a JSON config. Unknown keys and invalid values are collected and
/// reported together in one InvalidInput.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

/// Bundled configurations: "paper_d1", "paper_d3", "paper_d5".
std::optional<ExperimentConfig> builtin_config(std::string_view name);
std::vector<std::string> builtin_config_names();

/// Seed of the dataset for (n, replication); shared by every method.
std::uint64_t dataset_seed(std::uint64_t master_seed, std::size_t n, std::size_t replication) noexcept;

struct RunRecord {
  std::size_t method = 0;  // index into config.methods
  std::size_t n = 0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;               // NaN on failure
  std::optional<double> lambda_used;   // control functionals only
  std::string error;                   // empty on success
};

struct CellSummary {
  std::size_t n = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  bool flagged = false;  // more than 10% of replications failed
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance (divide by successes)
  double mse = 0.0;       // mean squared error against the oracle mean
  double n_mse = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double standard_error = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // points dropped for non-positive MSE
};

/// OLS fit of log(MSE) on log(n). Points with MSE <= 0 are excluded; fewer
/// than three remaining points throws InvalidInput.
SlopeFit estimate_slope(const std::vector<std::pair<double, double>>& points);

struct MethodSummary {
  std::string label;
  Method method = Method::Mean;
  std::vector<CellSummary> cells;  // one per n in grid order
  std::optional<SlopeFit> slope;
  std::string slope_note;  // why the slope is missing, or exclusions
};

struct ConvergenceReport {
  ExperimentConfig config;
  std::string problem_name;
  double true_mean = 0.0;
  std::vector<RunRecord> records;  // ordered by (n, replication, method)
  std::vector<MethodSummary> methods;
};

struct RunOptions {
  std::size_t threads = 1;
};

/// Runs every method on the same dataset for each (n, replication) and
/// aggregates. Results do not depend on `threads`.
ConvergenceReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Runs one configured method on a dataset.
Estimate run_method(const MethodSpec& spec, const ScoredDataset& data, const TargetProblem& problem,
                    const ExperimentConfig& config, std::uint64_t seed);

/// Columns: method,n,replication,estimate,lambda_used,seed.
void write_records_csv(std::ostream& out, const ConvergenceReport& report);
nlohmann::json report_to_json(const ConvergenceReport& report);

inline constexpr int kReportSchemaVersion = 1;

}  // namespace kcf
