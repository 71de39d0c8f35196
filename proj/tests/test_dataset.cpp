#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kcf/dataset.hpp"
#include "kcf/errors.hpp"

using namespace kcf;

namespace {

ScoredDataset small() {
  RowMatrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  RowMatrix u = -x;
  Eigen::VectorXd f(3);
  f << 10, 20, 30;
  return {x, u, f};
}

}  // namespace

TEST_CASE("accessors") {
  const auto d = small();
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.point(1)[1] == 4.0);
  CHECK(d.score(2)[0] == -5.0);
  CHECK(d.f(0) == 10.0);
}

TEST_CASE("subset keeps the requested order") {
  const auto d = small();
  const std::vector<std::size_t> idx{2, 0};
  const auto s = d.subset(idx);
  REQUIRE(s.size() == 2);
  CHECK(s.point(0)[0] == 5.0);
  CHECK(s.f(1) == 10.0);
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(d.subset(bad), InvalidInput);
  CHECK(d.subset(std::vector<std::size_t>{}).empty());
}

TEST_CASE("shape and finiteness are validated") {
  RowMatrix x(2, 1), u(3, 1);
  x << 0, 1;
  u << 0, 1, 2;
  CHECK_THROWS_AS(ScoredDataset(x, u, Eigen::VectorXd::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(ScoredDataset(x, -x, Eigen::VectorXd::Zero(3)), InvalidInput);
  RowMatrix y = x;
  y(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ScoredDataset(y, -x, Eigen::VectorXd::Zero(2)), InvalidInput);
  Eigen::VectorXd f(2);
  f << 0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ScoredDataset(x, -x, f), InvalidInput);
  CHECK_THROWS_AS(ScoredDataset(RowMatrix(2, 0), RowMatrix(2, 0), Eigen::VectorXd::Zero(2)), InvalidInput);
}

TEST_CASE("with_values replaces only f") {
  const auto d = small();
  const auto e = d.with_values(Eigen::VectorXd::Ones(3));
  CHECK(e.points() == d.points());
  CHECK(e.f(2) == 1.0);
  CHECK_THROWS_AS(d.with_values(Eigen::VectorXd::Ones(2)), InvalidInput);
  CHECK(ScoredDataset::without_values(d.points(), d.scores()).f_values().isZero());
}
