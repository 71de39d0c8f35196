#include "kcf/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "kcf/errors.hpp"
#include "kcf/random.hpp"

namespace kcf {
namespace {

constexpr std::array<double, 17> kLambdaGrid{1e-16, 1e-15, 1e-14, 1e-13, 1e-12, 1e-11,
                                             1e-10, 1e-9,  1e-8,  1e-7,  1e-6,  1e-5,
                                             1e-4,  1e-3,  1e-2,  1e-1,  1e0};
static_assert(kMinLambdaExponent == -16);

// Cholesky factor of K0 + jitter * I together with the solves every
// estimator needs.
class RegularisedSystem {
 public:
  RegularisedSystem(const Eigen::MatrixXd& k0, double jitter) {
    const Eigen::Index m = k0.rows();
    Eigen::MatrixXd a = k0;
    a.diagonal().array() += jitter;
    llt_.compute(a);
    if (llt_.info() != Eigen::Success) {
      throw SingularMatrix(fmt::format(
          "Cholesky factorisation of the {}x{} regularised kernel matrix failed "
          "(jitter {:g}); use a larger lambda",
          m, m, jitter));
    }
    inv_ones_ = solve(Eigen::VectorXd::Ones(m));
    ones_inv_ones_ = inv_ones_.sum();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  const Eigen::VectorXd& inv_ones() const noexcept { return inv_ones_; }
  double ones_inv_ones() const noexcept { return ones_inv_ones_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd inv_ones_;
  double ones_inv_ones_ = 0.0;
};

void require_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidInput(fmt::format("lambda must be finite and non-negative, got {}", lambda));
  }
}

double resolve_lambda(const Eigen::MatrixXd& k0, std::optional<double> lambda) {
  if (lambda) {
    require_lambda(*lambda);
    return *lambda;
  }
  return select_lambda(k0).lambda;
}

double clamp_discrepancy(double value, double scale) {
  if (value < -1e-10 * std::max(scale, std::numeric_limits<double>::min())) {
    throw NumericalError(fmt::format(
        "discrepancy evaluated to {:g} (scale {:g}); the kernel system is too ill-conditioned",
        value, scale));
  }
  return std::max(value, 0.0);
}

}  // namespace

LambdaSelection select_lambda(const Eigen::MatrixXd& k0) {
  if (k0.rows() != k0.cols() || k0.rows() == 0) {
    throw InvalidInput(fmt::format("kernel matrix must be square and non-empty, got {}x{}",
                                   k0.rows(), k0.cols()));
  }
  if (!k0.allFinite()) {
    throw InvalidInput("kernel matrix has non-finite entries");
  }
  const double scale = std::max(1.0, k0.cwiseAbs().maxCoeff());
  if ((k0 - k0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInput("kernel matrix is not symmetric");
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k0, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const auto m = static_cast<double>(k0.rows());

  LambdaSelection out;
  for (const double lambda : kLambdaGrid) {
    const double shift = lambda * m;
    const double smallest = lo + shift;
    const double cond = smallest > 0.0 ? (hi + shift) / smallest
                                       : std::numeric_limits<double>::infinity();
    out = {lambda, cond, cond < kMaxConditionNumber};
    if (out.within_limit) return out;
  }
  return out;
}

SurrogateFit fit_surrogate(const ScoredDataset& d0, const SteinKernelParams& params,
                           double lambda) {
  if (d0.empty()) throw InvalidInput("cannot fit a surrogate to an empty dataset");
  return fit_surrogate(d0, stein_gram(d0, params), params, lambda);
}

SurrogateFit fit_surrogate(const ScoredDataset& d0, const Eigen::MatrixXd& k0,
                           const SteinKernelParams& params, double lambda) {
  if (d0.empty()) throw InvalidInput("cannot fit a surrogate to an empty dataset");
  if (k0.rows() != static_cast<Eigen::Index>(d0.size()) || k0.cols() != k0.rows()) {
    throw InvalidInput("Gram matrix does not match the node count");
  }
  require_lambda(lambda);
  params.validate();

  const RegularisedSystem system(k0, lambda * static_cast<double>(d0.size()));
  const Eigen::VectorXd inv_f = system.solve(d0.f_values());
  const double c_hat = inv_f.sum() / (1.0 + system.ones_inv_ones());
  Eigen::VectorXd beta = inv_f - c_hat * system.inv_ones();
  return {c_hat, std::move(beta), d0, lambda, params};
}

double predict_surrogate(const SurrogateFit& fit, std::span<const double> x,
                         std::span<const double> u_x) {
  if (x.size() != fit.nodes.dim() || u_x.size() != fit.nodes.dim()) {
    throw InvalidInput(fmt::format("prediction point has dimension {} (score {}), fit has {}",
                                   x.size(), u_x.size(), fit.nodes.dim()));
  }
  double psi = 0.0;
  for (std::size_t i = 0; i < fit.nodes.size(); ++i) {
    psi += fit.beta[static_cast<Eigen::Index>(i)] *
           stein_kernel(fit.nodes.point(i), fit.nodes.score(i), x, u_x, fit.params);
  }
  return fit.c_hat + psi;
}

Eigen::VectorXd predict_surrogate(const SurrogateFit& fit, const ScoredDataset& at) {
  if (at.empty()) return {};
  if (at.dim() != fit.nodes.dim()) {
    throw InvalidInput(fmt::format("prediction set has dimension {}, fit has {}", at.dim(),
                                   fit.nodes.dim()));
  }
  const Eigen::MatrixXd cross = stein_cross(at, fit.nodes, fit.params);
  return (cross * fit.beta).array() + fit.c_hat;
}

SplitPlan SplitPlan::random(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || m > n) {
    throw InvalidInput(fmt::format("split size m={} must lie in [1, {}]", m, n));
  }
  Rng rng(seed);
  std::vector<std::size_t> perm = random_permutation(n, rng);
  SplitPlan plan;
  plan.m = m;
  plan.seed = seed;
  plan.index_d0.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
  plan.index_d1.assign(perm.begin() + static_cast<std::ptrdiff_t>(m), perm.end());
  std::sort(plan.index_d0.begin(), plan.index_d0.end());
  std::sort(plan.index_d1.begin(), plan.index_d1.end());
  return plan;
}

SplitPlan SplitPlan::leading(std::size_t n, std::size_t m) {
  if (m < 1 || m > n) {
    throw InvalidInput(fmt::format("split size m={} must lie in [1, {}]", m, n));
  }
  SplitPlan plan;
  plan.m = m;
  plan.index_d0.resize(m);
  plan.index_d1.resize(n - m);
  std::iota(plan.index_d0.begin(), plan.index_d0.end(), std::size_t{0});
  std::iota(plan.index_d1.begin(), plan.index_d1.end(), m);
  return plan;
}

void SplitPlan::validate(std::size_t n) const {
  if (m < 1 || m > n || index_d0.size() != m || index_d0.size() + index_d1.size() != n) {
    throw InvalidInput(fmt::format("split plan with m={}, |D0|={}, |D1|={} does not cover {} samples",
                                   m, index_d0.size(), index_d1.size(), n));
  }
  std::vector<bool> seen(n, false);
  for (const auto* list : {&index_d0, &index_d1}) {
    for (const std::size_t i : *list) {
      if (i >= n || seen[i]) {
        throw InvalidInput(fmt::format("split plan index {} is out of range or repeated", i));
      }
      seen[i] = true;
    }
  }
}

std::size_t split_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidInput(fmt::format("split fraction must lie in (0, 1), got {}", fraction));
  }
  const double raw = fraction * static_cast<double>(n);
  const auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::max<std::size_t>(m, 1);
}

SplitPlan multisplit_plan(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t index) {
  return SplitPlan::random(n, m, derive_seed(seed, {stream::kSplit, index}));
}

Estimate cf_split_estimate(const ScoredDataset& data, const SplitPlan& plan,
                           const SteinKernelParams& params, std::optional<double> lambda) {
  plan.validate(data.size());
  if (plan.m == data.size()) {
    throw InvalidInput("split estimator needs m < n; use the simplified estimator for m = n");
  }
  const ScoredDataset d0 = data.subset(plan.index_d0);
  const ScoredDataset d1 = data.subset(plan.index_d1);
  const SteinMatrixBundle blocks = assemble_matrices(d0, d1, params);
  const double lam = resolve_lambda(blocks.k0, lambda);

  const SurrogateFit fit = fit_surrogate(d0, blocks.k0, params, lam);
  const Eigen::VectorXd f1_hat = (blocks.k10 * fit.beta).array() + fit.c_hat;
  const double term_star = (d1.f_values() - f1_hat).mean();

  Estimate est;
  est.method = Method::CfSplit;
  est.term_star = term_star;
  est.term_star_star = fit.c_hat;
  est.value = term_star + fit.c_hat;
  est.lambda_used = lam;
  est.m = plan.m;
  est.n = data.size();
  est.discrepancy = weight_discrepancy(blocks, split_weights(blocks, lam));
  return est;
}

Estimate cf_simplified_estimate(const ScoredDataset& data, const SteinKernelParams& params,
                                std::optional<double> lambda) {
  if (data.empty()) throw InvalidInput("simplified estimator needs at least one sample");
  const Eigen::MatrixXd k0 = stein_gram(data, params);
  const double lam = resolve_lambda(k0, lambda);
  const SurrogateFit fit = fit_surrogate(data, k0, params, lam);

  Estimate est;
  est.method = Method::CfSimplified;
  est.value = fit.c_hat;
  est.term_star_star = fit.c_hat;
  est.lambda_used = lam;
  est.m = data.size();
  est.n = data.size();
  est.discrepancy = weight_discrepancy(k0, simplified_weights(k0, lam));
  return est;
}

Estimate cf_multisplit_estimate(const ScoredDataset& data, std::size_t n_splits,
                                double split_fraction, const SteinKernelParams& params,
                                std::uint64_t seed, std::optional<double> lambda) {
  if (n_splits < 1) throw InvalidInput("number of splits must be at least 1");
  const std::size_t n = data.size();
  const std::size_t m = split_size(n, split_fraction);
  if (m >= n) {
    throw InvalidInput(
        fmt::format("split fraction {} leaves no evaluation samples (m={}, n={})", split_fraction, m, n));
  }
  double total = 0.0;
  double max_lambda = 0.0;
  for (std::size_t s = 0; s < n_splits; ++s) {
    const Estimate e = cf_split_estimate(data, multisplit_plan(n, m, seed, s), params, lambda);
    total += e.value;
    max_lambda = std::max(max_lambda, e.lambda_used);
  }
  Estimate est;
  est.method = Method::CfMultisplit;
  est.value = total / static_cast<double>(n_splits);
  est.lambda_used = max_lambda;
  est.m = m;
  est.n = n;
  est.n_splits = n_splits;
  return est;
}

SplitWeights split_weights(const SteinMatrixBundle& blocks, double lambda) {
  require_lambda(lambda);
  const Eigen::Index m = blocks.k0.rows();
  const Eigen::Index held_out = blocks.k10.rows();
  if (held_out == 0) throw InvalidInput("split weights need a non-empty D1");
  const double inv_held = 1.0 / static_cast<double>(held_out);

  const RegularisedSystem system(blocks.k0, lambda * static_cast<double>(m));
  const Eigen::VectorXd k01_ones = blocks.k10.colwise().sum().transpose();
  const Eigen::VectorXd v = system.solve(k01_ones);
  const double a = system.ones_inv_ones();
  const double b = v.sum();

  SplitWeights w;
  w.w0 = inv_held * (-v + (b / (1.0 + a)) * system.inv_ones());
  w.w1 = Eigen::VectorXd::Constant(held_out, inv_held);
  w.lambda = lambda;
  return w;
}

Eigen::VectorXd simplified_weights(const Eigen::MatrixXd& k0, double lambda) {
  require_lambda(lambda);
  const RegularisedSystem system(k0, lambda * static_cast<double>(k0.rows()));
  return system.inv_ones() / (1.0 + system.ones_inv_ones());
}

Eigen::VectorXd cf_weights(const ScoredDataset& data, const SplitPlan& plan,
                           const SteinKernelParams& params, std::optional<double> lambda) {
  plan.validate(data.size());
  if (plan.m == data.size()) throw InvalidInput("split weights need m < n");
  const SteinMatrixBundle blocks =
      assemble_matrices(data.subset(plan.index_d0), data.subset(plan.index_d1), params);
  const SplitWeights w = split_weights(blocks, resolve_lambda(blocks.k0, lambda));
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < plan.index_d0.size(); ++i) {
    out[static_cast<Eigen::Index>(plan.index_d0[i])] = w.w0[static_cast<Eigen::Index>(i)];
  }
  for (std::size_t i = 0; i < plan.index_d1.size(); ++i) {
    out[static_cast<Eigen::Index>(plan.index_d1[i])] = w.w1[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double weight_discrepancy(const SteinMatrixBundle& blocks, const SplitWeights& w) {
  const double q0 = w.w0.dot(blocks.k0 * w.w0);
  const double q01 = w.w1.dot(blocks.k10 * w.w0);
  const double q1 = w.w1.dot(blocks.k1 * w.w1);
  const double mass = w.w0.sum() + w.w1.sum() - 1.0;
  const double value = q0 + 2.0 * q01 + q1 + mass * mass;
  return clamp_discrepancy(value, std::abs(q0) + 2.0 * std::abs(q01) + std::abs(q1) + mass * mass);
}

double weight_discrepancy(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  if (k.rows() != w.size() || k.cols() != w.size()) {
    throw InvalidInput("weight vector does not match the kernel matrix");
  }
  const double quad = w.dot(k * w);
  const double mass = w.sum() - 1.0;
  const double scale = w.cwiseAbs().dot(k.cwiseAbs() * w.cwiseAbs()) + mass * mass;
  return clamp_discrepancy(quad + mass * mass, scale);
}

double closed_form_discrepancy(const SteinMatrixBundle& blocks, double lambda) {
  require_lambda(lambda);
  const Eigen::Index held_out = blocks.k10.rows();
  if (held_out == 0) throw InvalidInput("discrepancy needs a non-empty D1");

  const RegularisedSystem system(blocks.k0, lambda * static_cast<double>(blocks.k0.rows()));
  const Eigen::VectorXd k01_ones = blocks.k10.colwise().sum().transpose();
  const Eigen::VectorXd v = system.solve(k01_ones);
  const double a = system.ones_inv_ones();
  const double b = v.sum();
  const double first = b * b / (1.0 + a);
  const double second = k01_ones.dot(v);
  const double third = blocks.k1.sum();
  const double norm = static_cast<double>(held_out) * static_cast<double>(held_out);
  return clamp_discrepancy((first - second + third) / norm,
                           (std::abs(first) + std::abs(second) + std::abs(third)) / norm);
}

Discrepancy discrepancy(const ScoredDataset& d0, const ScoredDataset& d1,
                        const SteinKernelParams& params, std::optional<double> lambda) {
  if (d1.empty()) throw InvalidInput("discrepancy needs a non-empty D1");
  const SteinMatrixBundle blocks = assemble_matrices(d0, d1, params);
  const double lam = resolve_lambda(blocks.k0, lambda);
  return {closed_form_discrepancy(blocks, lam), lam};
}

CrossValidationResult cross_validate(const ScoredDataset& d0,
                                     std::span<const SteinKernelParams> grid,
                                     double train_fraction, std::uint64_t seed) {
  if (grid.empty()) throw InvalidInput("cross-validation grid is empty");
  const std::size_t m = d0.size();
  const std::size_t m_train = split_size(m, train_fraction);
  if (m_train < 2 || m_train >= m) {
    throw InvalidInput(fmt::format(
        "cross-validation needs >= 2 training and >= 1 test points (m={}, training={})", m, m_train));
  }

  Rng rng(derive_seed(seed, {stream::kCrossValidation}));
  const std::vector<std::size_t> perm = random_permutation(m, rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(m_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const ScoredDataset d00 = d0.subset(train);
  const ScoredDataset d01 = d0.subset(test);

  CrossValidationResult result;
  result.errors.resize(grid.size());
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    try {
      const Eigen::MatrixXd k0 = stein_gram(d00, grid[g]);
      const SurrogateFit fit = fit_surrogate(d00, k0, grid[g], select_lambda(k0).lambda);
      const double err = (d01.f_values() - predict_surrogate(fit, d01)).norm();
      if (!std::isfinite(err)) throw NumericalError("non-finite prediction error");
      result.errors[g] = err;
      if (!any || err < best) {
        best = err;
        result.best = grid[g];
        result.best_index = g;
        any = true;
      }
    } catch (const Error& e) {
      result.failures.push_back(fmt::format("alpha1={} alpha2={}: {}", grid[g].alpha1,
                                            grid[g].alpha2, e.what()));
    }
  }
  if (!any) {
    std::string msg = "cross-validation failed for every candidate:";
    for (const auto& f : result.failures) msg += "\n  " + f;
    throw Error(msg);
  }
  return result;
}

}  // namespace kcf
