#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kcf/dataset.hpp"
#include "kcf/estimate.hpp"
#include "kcf/kernel.hpp"

namespace kcf {

/// Upper bound on the condition number of the factorised kernel matrix.
inline constexpr double kMaxConditionNumber = 1e10;

/// Regularisation grid is {10^kMinLambdaExponent, ..., 10^0}.
inline constexpr int kMinLambdaExponent = -16;

struct LambdaSelection {
  double lambda = 1.0;
  double condition_number = 0.0;  // of K0 + lambda * m * I
  bool within_limit = true;       // false when even lambda = 1 misses the target
};

/// Smallest power of ten λ on the grid for which K0 + λ m I has 2-norm
/// condition number below 1e10. The jitter is applied as λ m, matching the
/// matrix that the estimators factorise. Throws InvalidInput if K0 is not
/// square and symmetric.
LambdaSelection select_lambda(const Eigen::MatrixXd& k0);

/// Fitted surrogate s(x) = ĉ + Σ_i β_i k0(node_i, x).
struct SurrogateFit {
  double c_hat = 0.0;
  Eigen::VectorXd beta;
  ScoredDataset nodes;
  double lambda = 0.0;
  SteinKernelParams params;
};

/// Penalised least-squares fit in the space of constants plus control
/// functionals, with K0 replaced by K0 + λ m I. Throws SingularMatrix if the
/// Cholesky factorisation fails.
SurrogateFit fit_surrogate(const ScoredDataset& d0, const SteinKernelParams& params, double lambda);

/// As above with a precomputed Gram matrix k0 = stein_gram(d0, params).
SurrogateFit fit_surrogate(const ScoredDataset& d0, const Eigen::MatrixXd& k0,
                           const SteinKernelParams& params, double lambda);

double predict_surrogate(const SurrogateFit& fit, std::span<const double> x,
                         std::span<const double> u_x);

/// Predictions at every point of `at` (integrand values of `at` are ignored).
Eigen::VectorXd predict_surrogate(const SurrogateFit& fit, const ScoredDataset& at);

/// Partition of sample indices into a fitting half D0 and an evaluation half D1.
struct SplitPlan {
  std::size_t m = 0;
  std::vector<std::size_t> index_d0;
  std::vector<std::size_t> index_d1;
  std::uint64_t seed = 0;

  /// Uniformly random split with |D0| = m; both index lists sorted.
  static SplitPlan random(std::size_t n, std::size_t m, std::uint64_t seed);
  /// D0 = first m indices.
  static SplitPlan leading(std::size_t n, std::size_t m);

  /// Throws InvalidInput unless the lists partition 0..n-1 with |D0| = m >= 1.
  void validate(std::size_t n) const;
};

/// ⌈fraction · n⌉ with a tolerance for representation error in `fraction`.
std::size_t split_size(std::size_t n, double fraction);

/// Plan used for split `index` of a multi-split run seeded with `seed`.
SplitPlan multisplit_plan(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t index);

/// Sample-splitting estimator: mean residual of the surrogate on D1 plus ĉ.
/// Requires 1 <= m < n; λ defaults to select_lambda on K0.
Estimate cf_split_estimate(const ScoredDataset& data, const SplitPlan& plan,
                           const SteinKernelParams& params,
                           std::optional<double> lambda = std::nullopt);

/// Simplified estimator: ĉ fitted on all n samples, 1ᵀA⁻¹f / (1 + 1ᵀA⁻¹1)
/// with A = K0 + λ n I.
Estimate cf_simplified_estimate(const ScoredDataset& data, const SteinKernelParams& params,
                                std::optional<double> lambda = std::nullopt);

/// Average of cf_split_estimate over `n_splits` random splits of size
/// m = ⌈split_fraction · n⌉. lambda_used reports the largest λ over splits.
Estimate cf_multisplit_estimate(const ScoredDataset& data, std::size_t n_splits,
                                double split_fraction, const SteinKernelParams& params,
                                std::uint64_t seed, std::optional<double> lambda = std::nullopt);

/// Estimator weights on D0 and D1 for the split estimator.
///
/// They do not depend on f. Their sum is 1 - b / ((n-m)(1+a)) with
/// a = 1ᵀA⁻¹1 and b = 1ᵀA⁻¹K01 1, because the constant part of the
/// surrogate is penalised; the sum tends to one as a grows.
struct SplitWeights {
  Eigen::VectorXd w0;
  Eigen::VectorXd w1;
  double lambda = 0.0;
};

SplitWeights split_weights(const SteinMatrixBundle& blocks, double lambda);

/// Simplified-estimator weights A⁻¹1 / (1 + 1ᵀA⁻¹1), A = K0 + λ n I.
Eigen::VectorXd simplified_weights(const Eigen::MatrixXd& k0, double lambda);

/// Split-estimator weights scattered back to sample order (length n).
Eigen::VectorXd cf_weights(const ScoredDataset& data, const SplitPlan& plan,
                           const SteinKernelParams& params,
                           std::optional<double> lambda = std::nullopt);

/// ‖Σ_i w_i k+(·, x_i) - 1‖² in H+ = C + H0, i.e. wᵀKw + (1ᵀw - 1)².
/// For any f in H+, |wᵀf - μ(f)| <= sqrt(this) · ‖f‖_{H+}.
double weight_discrepancy(const SteinMatrixBundle& blocks, const SplitWeights& w);
double weight_discrepancy(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);

struct Discrepancy {
  double value = 0.0;
  double lambda = 0.0;
};

/// Closed-form discrepancy
///
///   D = [(1ᵀK10 A⁻¹1)² / (1 + 1ᵀA⁻¹1) - 1ᵀK10 A⁻¹ K01 1 + 1ᵀK1 1] / (n-m)²
///
/// with A = K0 + λ m I. At λ = 0 it equals weight_discrepancy of the split
/// weights. Slightly negative values from rounding are clamped to zero;
/// anything below -1e-10 (relative) throws NumericalError.
double closed_form_discrepancy(const SteinMatrixBundle& blocks, double lambda);

/// Discrepancy of a split; λ defaults to select_lambda on K0 and is reported.
Discrepancy discrepancy(const ScoredDataset& d0, const ScoredDataset& d1,
                        const SteinKernelParams& params,
                        std::optional<double> lambda = std::nullopt);

struct CrossValidationResult {
  SteinKernelParams best;
  std::size_t best_index = 0;
  /// Held-out L2 prediction error per grid entry; empty where the fit failed.
  std::vector<std::optional<double>> errors;
  std::vector<std::string> failures;
};

/// Picks kernel parameters by fitting on ⌈train_fraction · m⌉ points of D0
/// and scoring ‖f - f̂‖₂ on the rest. Ties go to the earliest grid entry.
/// The split draws from a stream derived from `seed` that no estimator uses.
CrossValidationResult cross_validate(const ScoredDataset& d0,
                                     std::span<const SteinKernelParams> grid,
                                     double train_fraction, std::uint64_t seed);

}  // namespace kcf
