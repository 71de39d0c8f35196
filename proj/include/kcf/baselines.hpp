#pragma once

#include <span>

#include <Eigen/Dense>

#include "kcf/dataset.hpp"
#include "kcf/estimate.hpp"
#include "kcf/targets.hpp"

namespace kcf {

double arithmetic_mean(std::span<const double> f_values);

/// Zero-variance control variates ψ_j = ΔP_j + ∇P_j · u for the monomials
/// P_j of degree 1 (x_i) and, for degree 2, also x_i x_k with i <= k.
struct ZvFit {
  int degree = 1;
  /// One coefficient per basis column; zero for columns that were constant
  /// on the sample and hence dropped from the regression.
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
};

/// Number of ψ basis functions for the given degree and dimension.
Eigen::Index zv_basis_size(int degree, std::size_t d);

/// n x p matrix of ψ_j(x_i).
Eigen::MatrixXd zv_basis(const ScoredDataset& data, int degree);

/// Ordinary least squares of f on {1} ∪ ψ. Throws InvalidInput for a
/// rank-deficient design.
ZvFit zv_fit(const ScoredDataset& data, int degree);

/// Mean of f minus the fitted control variate, i.e. the regression intercept.
Estimate zv_estimate(const ScoredDataset& data, int degree);

/// Trapezoid rule for ∫ f π over [min x, max x] using the sorted sample as
/// nodes; tails beyond the extreme order statistics are dropped. Needs the
/// normalised density and d = 1.
double riemann_1d(const ScoredDataset& data, const ScalarField& normalised_density);

}  // namespace kcf
