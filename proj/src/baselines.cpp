#include "kcf/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "kcf/errors.hpp"

namespace kcf {

double arithmetic_mean(std::span<const double> f_values) {
  if (f_values.empty()) throw InvalidInput("arithmetic mean of an empty sample");
  return std::accumulate(f_values.begin(), f_values.end(), 0.0) /
         static_cast<double>(f_values.size());
}

Eigen::Index zv_basis_size(int degree, std::size_t d) {
  const auto dd = static_cast<Eigen::Index>(d);
  if (degree == 1) return dd;
  if (degree == 2) return dd + dd * (dd + 1) / 2;
  throw InvalidInput(fmt::format("ZV degree must be 1 or 2, got {}", degree));
}

Eigen::MatrixXd zv_basis(const ScoredDataset& data, int degree) {
  const std::size_t d = data.dim();
  const Eigen::Index p = zv_basis_size(degree, d);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd psi(n, p);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto x = data.point(static_cast<std::size_t>(r));
    const auto u = data.score(static_cast<std::size_t>(r));
    Eigen::Index c = 0;
    // P = x_i: ΔP = 0, ∇P·u = u_i.
    for (std::size_t i = 0; i < d; ++i) psi(r, c++) = u[i];
    if (degree == 2) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = i; k < d; ++k) {
          // P = x_i x_k: ΔP = 2 δ_ik, ∇P·u = x_k u_i + x_i u_k.
          psi(r, c++) = (i == k ? 2.0 : 0.0) + x[k] * u[i] + x[i] * u[k];
        }
      }
    }
  }
  return psi;
}

ZvFit zv_fit(const ScoredDataset& data, int degree) {
  const Eigen::MatrixXd psi = zv_basis(data, degree);
  const Eigen::Index n = psi.rows();
  const Eigen::Index p = psi.cols();
  if (n <= p) {
    throw InvalidInput(fmt::format("ZV degree {} needs more than {} samples, got {}", degree, p, n));
  }

  const Eigen::RowVectorXd col_mean = psi.colwise().mean();
  const Eigen::MatrixXd centred = psi.rowwise() - col_mean;
  const double f_mean = data.f_values().mean();
  const Eigen::VectorXd y = data.f_values().array() - f_mean;

  // A column that is constant on the sample (e.g. ψ ≡ 0 when u ≡ 0) carries
  // no information once centred; it is dropped and its coefficient is zero.
  const double scale = 1.0 + psi.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (centred.col(j).cwiseAbs().maxCoeff() > 1e-14 * scale) kept.push_back(j);
  }

  ZvFit fit;
  fit.degree = degree;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  if (!kept.empty()) {
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
      design.col(static_cast<Eigen::Index>(j)) = centred.col(kept[j]);
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
      throw InvalidInput(fmt::format(
          "ZV regression is rank-deficient (rank {} of {}); use fewer basis terms", qr.rank(),
          design.cols()));
    }
    const Eigen::VectorXd theta = qr.solve(y);
    for (std::size_t j = 0; j < kept.size(); ++j) {
      fit.coefficients[kept[j]] = theta[static_cast<Eigen::Index>(j)];
    }
  }
  fit.intercept = f_mean - col_mean.dot(fit.coefficients);
  return fit;
}

Estimate zv_estimate(const ScoredDataset& data, int degree) {
  const ZvFit fit = zv_fit(data, degree);
  Estimate est;
  est.method = degree == 1 ? Method::Zv1 : Method::Zv2;
  est.value = fit.intercept;
  est.m = data.size();
  est.n = data.size();
  return est;
}

double riemann_1d(const ScoredDataset& data, const ScalarField& normalised_density) {
  if (data.dim() != 1) {
    throw Unsupported(fmt::format("Riemann-sum baseline is one-dimensional, data has d={}", data.dim()));
  }
  if (data.size() < 2) throw InvalidInput("Riemann-sum baseline needs at least two samples");
  if (!normalised_density) throw InvalidInput("Riemann-sum baseline needs the normalised density");

  std::vector<std::pair<double, double>> nodes(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data.point(i)[0];
    nodes[i] = {x, data.f(i) * normalised_density(data.point(i))};
  }
  std::sort(nodes.begin(), nodes.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    total += 0.5 * (nodes[i + 1].first - nodes[i].first) * (nodes[i].second + nodes[i + 1].second);
  }
  return total;
}

}  // namespace kcf
