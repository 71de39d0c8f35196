#pragma once

#include <span>

#include <Eigen/Dense>

#include "kcf/dataset.hpp"

namespace kcf {

/// Hyper-parameters of the base kernel
///
///   k(x, x') = (1 + a1 |x|^2 + a1 |x'|^2)^-1 exp(-|x - x'|^2 / (2 a2^2)).
///
/// a1 controls the polynomial decay that keeps k0(x, x) bounded when the
/// score grows linearly in |x|; a2 is the length-scale, in sample units.
struct SteinKernelParams {
  double alpha1 = 0.1;
  double alpha2 = 1.0;

  /// Throws InvalidInput unless both parameters are finite and positive.
  void validate() const;

  friend bool operator==(const SteinKernelParams&, const SteinKernelParams&) = default;
};

/// Base kernel value and the derivatives entering the Stein kernel.
struct KernelDerivatives {
  double k_value = 0.0;
  Eigen::VectorXd grad_x;   // ∇_x k
  Eigen::VectorXd grad_xp;  // ∇_x' k
  double div_grad = 0.0;    // ∇_x · ∇_x' k
};

double base_kernel(std::span<const double> x, std::span<const double> xp,
                   const SteinKernelParams& params);

/// Closed-form derivatives of the base kernel.
KernelDerivatives base_kernel_derivatives(std::span<const double> x, std::span<const double> xp,
                                          const SteinKernelParams& params);

/// Stein kernel
///
///   k0(x, x') = ∇_x·∇_x' k + u(x)·∇_x' k + u(x')·∇_x k + u(x)·u(x') k
///
/// for caller-supplied scores u. The evaluation is exactly symmetric under
/// the joint swap (x, u_x) <-> (xp, u_xp).
double stein_kernel(std::span<const double> x, std::span<const double> u_x,
                    std::span<const double> xp, std::span<const double> u_xp,
                    const SteinKernelParams& params);

/// Symmetric Stein Gram matrix of a dataset (upper triangle computed, mirrored).
Eigen::MatrixXd stein_gram(const ScoredDataset& data, const SteinKernelParams& params);

/// Rectangular block (k0(rows_i, cols_j)).
Eigen::MatrixXd stein_cross(const ScoredDataset& rows, const ScoredDataset& cols,
                            const SteinKernelParams& params);

/// Kernel blocks for a split D = D0 ∪ D1.
struct SteinMatrixBundle {
  Eigen::MatrixXd k0;   // m x m, k0(D0, D0)
  Eigen::MatrixXd k10;  // (n-m) x m, k0(D1, D0)
  Eigen::MatrixXd k1;   // (n-m) x (n-m), k0(D1, D1)
};

SteinMatrixBundle assemble_matrices(const ScoredDataset& d0, const ScoredDataset& d1,
                                    const SteinKernelParams& params);

}  // namespace kcf
