#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kcf/dataset.hpp"
#include "kcf/random.hpp"

namespace kcf {

using ScalarField = std::function<double(std::span<const double>)>;
using ScoreField = std::function<void(std::span<const double>, std::span<double>)>;

/// A benchmark problem: target π (through its score and a sampler), an
/// integrand, and where known the exact expectation.
///
/// Estimators only ever see `score`. The normalised `density` exists for
/// quadrature oracles and for baselines that cannot work without it.
struct TargetProblem {
  std::string name;
  std::size_t dimension = 1;
  ScoreField score;
  std::function<RowMatrix(Rng&, std::size_t)> sampler;
  ScalarField integrand;
  std::string integrand_name;
  std::optional<double> true_mean;  // nullopt: use oracle_mean
  ScalarField density;
  std::pair<double, double> quadrature_bounds{-12.0, 12.0};  // per coordinate

  /// Draws n IID points and caches f and the score at each.
  ScoredDataset draw(Rng& rng, std::size_t n) const;
  /// Scores and integrand values at given points.
  ScoredDataset evaluate(RowMatrix points) const;
};

/// Integrand families: "sin" = sin((π/d) Σ x_i), "sum" = Σ x_i,
/// "square" = Σ x_i², "one" = 1.
ScalarField make_integrand(std::string_view name, std::size_t d);

/// d-dimensional standard Gaussian, score u(x) = -x.
TargetProblem gaussian_problem(std::size_t d, std::string_view integrand = "sin");

/// One-dimensional Gaussian mixture with (possibly unnormalised) weights.
TargetProblem mixture_problem(std::vector<double> weights, std::vector<double> means,
                              std::vector<double> scales, std::string_view integrand = "sin");

/// Expectation of the integrand: the analytic value when known, otherwise
/// adaptive Gauss-Kronrod quadrature of f·π (d <= 2 only; Unsupported above).
double oracle_mean(const TargetProblem& problem, double tol = 1e-10);

}  // namespace kcf
