#include <doctest.h>

#include <cmath>
#include <vector>

#include "kcf/errors.hpp"
#include "kcf/targets.hpp"

using namespace kcf;

namespace {

std::vector<double> score_at(const TargetProblem& p, std::vector<double> x) {
  std::vector<double> u(x.size());
  p.score(x, u);
  return u;
}

// Trapezoid rule on a uniform grid; independent of the adaptive oracle.
double trapezoid(const std::function<double(double)>& g, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double s = 0.5 * (g(lo) + g(hi));
  for (int i = 1; i < panels; ++i) s += g(lo + h * i);
  return s * h;
}

}  // namespace

TEST_CASE("integrands") {
  const std::vector<double> x{0.5, 1.0};
  CHECK(make_integrand("sin", 2)(x) == doctest::Approx(std::sin(M_PI / 2.0 * 1.5)));
  CHECK(make_integrand("sum", 2)(x) == 1.5);
  CHECK(make_integrand("square", 2)(x) == 1.25);
  CHECK(make_integrand("one", 2)(x) == 1.0);
  CHECK_THROWS_AS(make_integrand("cube", 2), InvalidInput);
}

TEST_CASE("gaussian problem") {
  const auto p = gaussian_problem(3);
  CHECK(p.dimension == 3);
  const auto u = score_at(p, {0.5, -1.0, 2.0});
  CHECK(u == std::vector<double>{-0.5, 1.0, -2.0});
  CHECK(oracle_mean(gaussian_problem(1)) == 0.0);
  CHECK(oracle_mean(gaussian_problem(4, "square")) == 4.0);
  CHECK(oracle_mean(gaussian_problem(2, "one")) == 1.0);
}

TEST_CASE("gaussian quadrature oracle") {
  auto p = gaussian_problem(1, "square");
  p.true_mean.reset();
  CHECK(oracle_mean(p) == doctest::Approx(1.0).epsilon(1e-10));
  auto q = gaussian_problem(2, "square");
  q.true_mean.reset();
  CHECK(oracle_mean(q) == doctest::Approx(2.0).epsilon(1e-9));
  auto r = gaussian_problem(3, "square");
  r.true_mean.reset();
  CHECK_THROWS_AS(oracle_mean(r), Unsupported);
}

TEST_CASE("sampler moments") {
  Rng rng(8);
  const auto d = gaussian_problem(2).draw(rng, 50000);
  CHECK(d.size() == 50000);
  CHECK(std::abs(d.points().col(0).mean()) < 0.02);
  CHECK(d.points().col(1).squaredNorm() / 50000.0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(d.scores() == -d.points());

  const auto mix = mixture_problem({1.0, 3.0}, {-2.0, 2.0}, {0.5, 0.5}, "sum");
  const auto m = mix.draw(rng, 50000);
  CHECK(m.points().col(0).mean() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("mixture score is the derivative of the log density") {
  const auto p = mixture_problem({0.3, 0.7}, {-1.0, 1.5}, {0.4, 0.9});
  const double h = 1e-5;
  for (double x : {-3.0, -1.0, 0.0, 0.7, 2.0, 4.0}) {
    const double lp = std::log(p.density(std::vector<double>{x + h}));
    const double lm = std::log(p.density(std::vector<double>{x - h}));
    CHECK(score_at(p, {x})[0] == doctest::Approx((lp - lm) / (2.0 * h)).epsilon(1e-7));
  }
  // Far tails stay finite thanks to log-sum-exp.
  CHECK(std::isfinite(score_at(p, {60.0})[0]));
  CHECK(score_at(p, {60.0})[0] == doctest::Approx(-(60.0 - 1.5) / 0.81).epsilon(1e-12));
}

TEST_CASE("single-component mixture is a Gaussian") {
  const auto p = mixture_problem({2.0}, {1.0}, {0.5});
  CHECK(score_at(p, {2.0})[0] == doctest::Approx(-(2.0 - 1.0) / 0.25));
}

TEST_CASE("mixture oracle means") {
  const auto sym = mixture_problem({1.0, 1.0}, {-1.0, 1.0}, {0.5, 0.5}, "sum");
  CHECK(std::abs(oracle_mean(sym)) < 1e-10);
  const auto sq = mixture_problem({1.0, 1.0}, {-1.0, 1.0}, {0.5, 0.5}, "square");
  const double oracle = oracle_mean(sq);
  CHECK(oracle == doctest::Approx(1.25).epsilon(1e-10));
  const double trap = trapezoid(
      [&](double x) { return x * x * sq.density(std::vector<double>{x}); }, -20.0, 20.0, 200000);
  CHECK(std::abs(oracle - trap) < 1e-8);
}

TEST_CASE("mixture validation") {
  CHECK_THROWS_AS(mixture_problem({1.0, -1.0}, {0.0, 1.0}, {1.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(mixture_problem({1.0}, {0.0}, {0.0}), InvalidInput);
  CHECK_THROWS_AS(mixture_problem({1.0}, {0.0, 1.0}, {1.0}), InvalidInput);
  CHECK_THROWS_AS(mixture_problem({}, {}, {}), InvalidInput);
}

TEST_CASE("evaluate checks dimension") {
  const auto p = gaussian_problem(2);
  CHECK_THROWS_AS(p.evaluate(RowMatrix::Zero(3, 1)), InvalidInput);
  const auto d = p.evaluate(RowMatrix::Zero(3, 2));
  CHECK(d.f_values().isZero());
}
