#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace kcf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sample points with cached score vectors u(x) = ∇log π(x) and integrand
/// values f(x).
///
/// This is the only view of the statistical model the estimators get: the
/// target density itself (normalised or not) never enters the estimation
/// path. An empty dataset (zero rows) is representable so that the
/// evaluation half of a split may be empty; estimators reject it where it
/// makes no sense.
class ScoredDataset {
 public:
  /// Validates shapes and finiteness; throws InvalidInput on failure.
  ScoredDataset(RowMatrix points, RowMatrix scores, Eigen::VectorXd f_values);

  /// Dataset without integrand values (all zero); used for kernel nodes.
  static ScoredDataset without_values(RowMatrix points, RowMatrix scores);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.row(static_cast<Eigen::Index>(i)).data(), dim()};
  }
  std::span<const double> score(std::size_t i) const noexcept {
    return {scores_.row(static_cast<Eigen::Index>(i)).data(), dim()};
  }
  double f(std::size_t i) const noexcept { return f_values_[static_cast<Eigen::Index>(i)]; }

  const RowMatrix& points() const noexcept { return points_; }
  const RowMatrix& scores() const noexcept { return scores_; }
  const Eigen::VectorXd& f_values() const noexcept { return f_values_; }

  /// Rows selected by `indices`, in the given order.
  ScoredDataset subset(std::span<const std::size_t> indices) const;

  /// Same points and scores, different integrand.
  ScoredDataset with_values(Eigen::VectorXd f_values) const;

 private:
  RowMatrix points_;
  RowMatrix scores_;
  Eigen::VectorXd f_values_;
};

}  // namespace kcf
