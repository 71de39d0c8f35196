#include "kcf/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "kcf/errors.hpp"

namespace kcf {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;

std::optional<double> gaussian_mean(std::string_view integrand, std::size_t d) {
  if (integrand == "sin" || integrand == "sum") return 0.0;
  if (integrand == "square") return static_cast<double>(d);
  if (integrand == "one") return 1.0;
  return std::nullopt;
}

}  // namespace

ScalarField make_integrand(std::string_view name, std::size_t d) {
  if (d < 1) throw InvalidInput("integrand dimension must be at least 1");
  if (name == "sin") {
    const double scale = std::numbers::pi / static_cast<double>(d);
    return [scale](std::span<const double> x) {
      return std::sin(scale * std::accumulate(x.begin(), x.end(), 0.0));
    };
  }
  if (name == "sum") {
    return [](std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); };
  }
  if (name == "square") {
    return [](std::span<const double> x) {
      return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    };
  }
  if (name == "one") {
    return [](std::span<const double>) { return 1.0; };
  }
  throw InvalidInput(fmt::format("unknown integrand '{}' (expected sin, sum, square or one)", name));
}

ScoredDataset TargetProblem::draw(Rng& rng, std::size_t n) const {
  return evaluate(sampler(rng, n));
}

ScoredDataset TargetProblem::evaluate(RowMatrix points) const {
  if (static_cast<std::size_t>(points.cols()) != dimension) {
    throw InvalidInput(fmt::format("points have dimension {}, problem '{}' has {}", points.cols(),
                                   name, dimension));
  }
  const auto n = points.rows();
  RowMatrix scores(n, points.cols());
  Eigen::VectorXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const double> x(points.row(i).data(), dimension);
    score(x, {scores.row(i).data(), dimension});
    f[i] = integrand(x);
  }
  return {std::move(points), std::move(scores), std::move(f)};
}

TargetProblem gaussian_problem(std::size_t d, std::string_view integrand) {
  if (d < 1) throw InvalidInput("Gaussian problem needs d >= 1");
  TargetProblem p;
  p.name = fmt::format("gaussian_d{}", d);
  p.dimension = d;
  p.score = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  };
  p.sampler = [d](Rng& rng, std::size_t n) {
    RowMatrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = rng.normal();
    }
    return pts;
  };
  p.integrand = make_integrand(integrand, d);
  p.integrand_name = std::string(integrand);
  p.true_mean = gaussian_mean(integrand, d);
  p.density = [d](std::span<const double> x) {
    const double r2 = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    return std::pow(kInvSqrt2Pi, static_cast<double>(d)) * std::exp(-0.5 * r2);
  };
  p.quadrature_bounds = {-12.0, 12.0};
  return p;
}

TargetProblem mixture_problem(std::vector<double> weights, std::vector<double> means,
                              std::vector<double> scales, std::string_view integrand) {
  const std::size_t k = weights.size();
  if (k == 0 || means.size() != k || scales.size() != k) {
    throw InvalidInput(fmt::format("mixture needs matching non-empty weights/means/scales ({}/{}/{})",
                                   weights.size(), means.size(), scales.size()));
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (!(weights[j] > 0.0) || !(scales[j] > 0.0) || !std::isfinite(weights[j]) ||
        !std::isfinite(scales[j]) || !std::isfinite(means[j])) {
      throw InvalidInput(fmt::format("mixture component {} has invalid weight/scale", j));
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;

  TargetProblem p;
  p.name = fmt::format("mixture_k{}", k);
  p.dimension = 1;
  // Log-sum-exp responsibilities keep the score finite far in the tails.
  p.score = [weights, means, scales](std::span<const double> x, std::span<double> out) {
    std::vector<double> logt(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const double z = (x[0] - means[j]) / scales[j];
      logt[j] = std::log(weights[j]) - std::log(scales[j]) - 0.5 * z * z;
    }
    const double top = *std::max_element(logt.begin(), logt.end());
    double norm = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const double r = std::exp(logt[j] - top);
      norm += r;
      acc += r * (-(x[0] - means[j]) / (scales[j] * scales[j]));
    }
    out[0] = acc / norm;
  };
  p.sampler = [weights, means, scales](Rng& rng, std::size_t n) {
    RowMatrix pts(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const double u = rng.uniform();
      std::size_t j = 0;
      double cum = weights[0];
      while (u >= cum && j + 1 < weights.size()) cum += weights[++j];
      pts(i, 0) = means[j] + scales[j] * rng.normal();
    }
    return pts;
  };
  p.integrand = make_integrand(integrand, 1);
  p.integrand_name = std::string(integrand);
  p.density = [weights, means, scales](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const double z = (x[0] - means[j]) / scales[j];
      s += weights[j] * kInvSqrt2Pi / scales[j] * std::exp(-0.5 * z * z);
    }
    return s;
  };
  double lo = means[0] - 12.0 * scales[0];
  double hi = means[0] + 12.0 * scales[0];
  for (std::size_t j = 1; j < k; ++j) {
    lo = std::min(lo, means[j] - 12.0 * scales[j]);
    hi = std::max(hi, means[j] + 12.0 * scales[j]);
  }
  p.quadrature_bounds = {lo, hi};
  return p;
}

double oracle_mean(const TargetProblem& problem, double tol) {
  if (problem.true_mean) return *problem.true_mean;
  if (!(tol > 0.0)) throw InvalidInput("oracle tolerance must be positive");
  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned kMaxDepth = 20;
  const auto [lo, hi] = problem.quadrature_bounds;
  if (problem.dimension == 1) {
    auto g = [&](double x) {
      const std::span<const double> pt(&x, 1);
      return problem.integrand(pt) * problem.density(pt);
    };
    return gauss_kronrod<double, 61>::integrate(g, lo, hi, kMaxDepth, tol * 1e-2);
  }
  if (problem.dimension == 2) {
    auto outer = [&](double x) {
      auto inner = [&](double y) {
        const double pt[2] = {x, y};
        return problem.integrand(pt) * problem.density(pt);
      };
      return gauss_kronrod<double, 61>::integrate(inner, lo, hi, kMaxDepth, tol * 1e-2);
    };
    return gauss_kronrod<double, 61>::integrate(outer, lo, hi, kMaxDepth, tol * 1e-2);
  }
  throw Unsupported(fmt::format("no analytic mean for '{}' and quadrature is limited to d <= 2",
                                problem.name));
}

}  // namespace kcf
