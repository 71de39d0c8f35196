#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kcf/dataset.hpp"
#include "kcf/kernel.hpp"
#include "kcf/targets.hpp"

namespace kcf {

/// ∫ k0(x, x') π(x') dx' by adaptive Gauss-Kronrod over the problem's
/// quadrature box (d = 1 only). Zero for a valid Stein kernel.
double mean_element(std::span<const double> x, const TargetProblem& problem,
                    const SteinKernelParams& params);

/// Worst norm-wise relative error of the closed-form derivatives against
/// central differences with step h, over `trials` random (x, x', a1, a2).
/// ∇k is compared with differences of k; ∇·∇'k with differences of ∇k.
double max_gradient_error(std::size_t dim, std::size_t trials, std::uint64_t seed, double h = 1e-5);

/// max_i k0(x_i, x_i) over a dataset; finite whenever scores are finite.
double sampled_sup_diagonal(const ScoredDataset& data, const SteinKernelParams& params);

}  // namespace kcf
