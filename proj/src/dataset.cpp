#include "kcf/dataset.hpp"

#include <fmt/format.h>

#include "kcf/errors.hpp"

namespace kcf {

ScoredDataset::ScoredDataset(RowMatrix points, RowMatrix scores, Eigen::VectorXd f_values)
    : points_(std::move(points)), scores_(std::move(scores)), f_values_(std::move(f_values)) {
  if (points_.cols() < 1) {
    throw InvalidInput("dataset dimension must be at least 1");
  }
  if (scores_.rows() != points_.rows() || scores_.cols() != points_.cols()) {
    throw InvalidInput(fmt::format("score matrix is {}x{} but points are {}x{}", scores_.rows(),
                                   scores_.cols(), points_.rows(), points_.cols()));
  }
  if (f_values_.size() != points_.rows()) {
    throw InvalidInput(fmt::format("{} integrand values for {} points", f_values_.size(),
                                   points_.rows()));
  }
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    if (!points_.row(i).allFinite() || !scores_.row(i).allFinite() ||
        !std::isfinite(f_values_[i])) {
      throw InvalidInput(fmt::format("non-finite value in sample {}", i));
    }
  }
}

ScoredDataset ScoredDataset::without_values(RowMatrix points, RowMatrix scores) {
  const auto n = points.rows();
  return {std::move(points), std::move(scores), Eigen::VectorXd::Zero(n)};
}

ScoredDataset ScoredDataset::subset(std::span<const std::size_t> indices) const {
  const auto d = points_.cols();
  RowMatrix pts(static_cast<Eigen::Index>(indices.size()), d);
  RowMatrix sc(static_cast<Eigen::Index>(indices.size()), d);
  Eigen::VectorXd fv(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) {
      throw InvalidInput(fmt::format("index {} out of range for {} samples", indices[k], size()));
    }
    const auto row = static_cast<Eigen::Index>(indices[k]);
    const auto out = static_cast<Eigen::Index>(k);
    pts.row(out) = points_.row(row);
    sc.row(out) = scores_.row(row);
    fv[out] = f_values_[row];
  }
  return {std::move(pts), std::move(sc), std::move(fv)};
}

ScoredDataset ScoredDataset::with_values(Eigen::VectorXd f_values) const {
  return {points_, scores_, std::move(f_values)};
}

}  // namespace kcf
