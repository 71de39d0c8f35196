#include "kcf/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "kcf/errors.hpp"
#include "kcf/random.hpp"

namespace kcf {

double mean_element(std::span<const double> x, const TargetProblem& problem,
                    const SteinKernelParams& params) {
  if (problem.dimension != 1 || x.size() != 1) {
    throw Unsupported("mean-element quadrature is implemented for d = 1");
  }
  double u_x = 0.0;
  problem.score(x, {&u_x, 1});
  auto integrand = [&](double xp) {
    double u_xp = 0.0;
    const std::span<const double> pt(&xp, 1);
    problem.score(pt, {&u_xp, 1});
    return stein_kernel(x, {&u_x, 1}, pt, {&u_xp, 1}, params) * problem.density(pt);
  };
  const auto [lo, hi] = problem.quadrature_bounds;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 25, 1e-14);
}

double max_gradient_error(std::size_t dim, std::size_t trials, std::uint64_t seed, double h) {
  if (dim < 1) throw InvalidInput("gradient check needs dim >= 1");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::VectorXd x(d);
    Eigen::VectorXd xp(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      x[i] = rng.normal();
      xp[i] = x[i] + 0.7 * rng.normal();
    }
    const SteinKernelParams p{0.05 + 0.5 * rng.uniform(), 0.5 + 1.5 * rng.uniform()};
    const auto sp = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), v.size()); };
    const KernelDerivatives kd = base_kernel_derivatives(sp(x), sp(xp), p);

    Eigen::VectorXd fd_x(d);
    Eigen::VectorXd fd_xp(d);
    double fd_div = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::VectorXd a = x;
      Eigen::VectorXd b = x;
      a[i] += h;
      b[i] -= h;
      fd_x[i] = (base_kernel(sp(a), sp(xp), p) - base_kernel(sp(b), sp(xp), p)) / (2.0 * h);
      a = xp;
      b = xp;
      a[i] += h;
      b[i] -= h;
      fd_xp[i] = (base_kernel(sp(x), sp(a), p) - base_kernel(sp(x), sp(b), p)) / (2.0 * h);
      fd_div += (base_kernel_derivatives(sp(x), sp(a), p).grad_x[i] -
                 base_kernel_derivatives(sp(x), sp(b), p).grad_x[i]) /
                (2.0 * h);
    }
    // Floors keep the error relative to the natural scale of each quantity
    // when the exact value happens to be near zero.
    const double grad_scale = std::max(fd_x.cwiseAbs().maxCoeff(), kd.k_value / p.alpha2);
    const double gradp_scale = std::max(fd_xp.cwiseAbs().maxCoeff(), kd.k_value / p.alpha2);
    const double div_scale = std::max(std::abs(fd_div), kd.k_value / (p.alpha2 * p.alpha2));
    worst = std::max({worst, (kd.grad_x - fd_x).cwiseAbs().maxCoeff() / grad_scale,
                      (kd.grad_xp - fd_xp).cwiseAbs().maxCoeff() / gradp_scale,
                      std::abs(kd.div_grad - fd_div) / div_scale});
  }
  return worst;
}

double sampled_sup_diagonal(const ScoredDataset& data, const SteinKernelParams& params) {
  double sup = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sup = std::max(sup, stein_kernel(data.point(i), data.score(i), data.point(i), data.score(i), params));
  }
  return sup;
}

}  // namespace kcf
