// Acceptance checks. Usage: kcf_acceptance [criterion ...]; with no
// arguments every criterion runs. One PASS/FAIL line is printed per
// criterion and the exit status is non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "kcf/baselines.hpp"
#include "kcf/bench.hpp"
#include "kcf/diagnostics.hpp"
#include "kcf/estimator.hpp"
#include "kcf/targets.hpp"
#include "support/oracles.hpp"

using namespace kcf;

namespace {

constexpr std::uint64_t kSeed = 20150101;

struct Outcome {
  bool pass = true;
  std::string summary;
};

MethodSpec spec(Method m) {
  MethodSpec s;
  s.method = m;
  s.label = std::string(method_name(m));
  return s;
}

ExperimentConfig sin_gaussian(std::size_t d, std::vector<std::size_t> grid, std::size_t reps,
                              std::vector<Method> methods) {
  ExperimentConfig c;
  c.name = "acceptance";
  c.problem.dimension = d;
  c.n_grid = std::move(grid);
  c.replications = reps;
  c.master_seed = kSeed;
  for (Method m : methods) c.methods.push_back(spec(m));
  return c;
}

// Estimates of method `index` at sample size n, in replication order.
std::vector<double> estimates(const ConvergenceReport& r, std::size_t index, std::size_t n) {
  std::vector<double> v;
  for (const auto& rec : r.records) {
    if (rec.method == index && rec.n == n) v.push_back(rec.estimate);
  }
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Outcome convergence_slopes() {
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_experiment(sin_gaussian(1, {25, 50, 100, 200, 400}, 100,
                                             {Method::Mean, Method::CfSimplified, Method::CfSplit}));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  std::vector<double> s;
  for (const auto& m : r.methods) {
    if (!m.slope) return {false, fmt::format("no slope for {}: {}", m.label, m.slope_note)};
    s.push_back(m.slope->slope);
  }
  o.pass = s[0] >= -1.3 && s[0] <= -0.7 && s[1] <= -1.2 && s[2] <= -1.1 && seconds < 300.0;
  o.summary = fmt::format("slopes mean {:.3f} in [-1.3,-0.7], cf-simplified {:.3f} <= -1.2, "
                          "cf-split {:.3f} <= -1.1; {:.1f} s single-threaded (< 300)",
                          s[0], s[1], s[2], seconds);
  return o;
}

Outcome variance_ordering() {
  const std::vector<std::size_t> sizes{50, 200};
  const auto r = run_experiment(
      sin_gaussian(1, sizes, 100, {Method::Mean, Method::Zv2, Method::CfSimplified}));
  Outcome o;
  std::vector<std::string> parts;
  constexpr int kResamples = 4000;
  for (std::size_t n : sizes) {
    const auto mean = estimates(r, 0, n);
    const auto zv = estimates(r, 1, n);
    const auto cf = estimates(r, 2, n);
    if (!all_finite(mean) || !all_finite(zv) || !all_finite(cf)) return {false, "failed replications"};
    // Paired bootstrap over replications.
    Rng rng(derive_seed(kSeed, {0xB007, n}));
    int cf_below_zv = 0, zv_below_mean = 0;
    std::vector<double> bm(mean.size()), bz(mean.size()), bc(mean.size());
    for (int b = 0; b < kResamples; ++b) {
      for (std::size_t i = 0; i < mean.size(); ++i) {
        const auto j = rng.below(mean.size());
        bm[i] = mean[j];
        bz[i] = zv[j];
        bc[i] = cf[j];
      }
      const double vm = variance_of(bm), vz = variance_of(bz), vc = variance_of(bc);
      cf_below_zv += vc < vz;
      zv_below_mean += vz < vm;
    }
    const double p1 = static_cast<double>(cf_below_zv) / kResamples;
    const double p2 = static_cast<double>(zv_below_mean) / kResamples;
    o.pass = o.pass && p1 >= 0.95 && p2 >= 0.95;
    parts.push_back(fmt::format("n={}: var mean {:.3e}, zv2 {:.3e}, cf-simplified {:.3e}; "
                                "P(cf<zv2) {:.3f}, P(zv2<mean) {:.3f}",
                                n, variance_of(mean), variance_of(zv), variance_of(cf), p1, p2));
  }
  o.summary = fmt::format("{} (each >= 0.95)", fmt::join(parts, "; "));
  return o;
}

Outcome simplified_bias() {
  const auto r = run_experiment(sin_gaussian(1, {50}, 20000, {Method::CfSimplified}));
  const auto v = estimates(r, 0, 50);
  if (!all_finite(v)) return {false, "failed replications"};
  const double m = mean_of(v);
  const double se = std::sqrt(variance_of(v) / static_cast<double>(v.size()));
  return {std::abs(m) < 2e-3,
          fmt::format("mean of cf-simplified at n=50 over {} replications: {:.3e} (se {:.1e}), |.| < 2e-3",
                      v.size(), m, se)};
}

Outcome split_unbiased() {
  auto c = sin_gaussian(1, {20}, 20000, {Method::CfSplit});
  c.split_fraction = 0.5;
  const auto r = run_experiment(c);
  const auto v = estimates(r, 0, 20);
  if (!all_finite(v)) return {false, "failed replications"};
  const double m = mean_of(v);
  const double se = std::sqrt(variance_of(v) / static_cast<double>(v.size()));
  return {std::abs(m) <= 4.0 * se,
          fmt::format("mean of cf-split (n=20, m=10) over {} replications: {:.3e}, {:.2f} standard errors (<= 4)",
                      v.size(), m, std::abs(m) / se)};
}

Outcome worst_case_bound() {
  const SteinKernelParams params{0.1, 1.0};
  Rng rng(derive_seed(kSeed, {5}));
  int ok = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const std::size_t n = 4 + rng.below(37);
    const std::size_t centers = 1 + rng.below(10);
    const auto f = kcf::testing::random_rkhs_function(rng, d, centers, params);
    auto data = kcf::testing::gaussian_dataset(n, d, rng(), [](std::span<const double>) { return 0.0; });
    data = data.with_values(f.values(data));
    const auto plan = SplitPlan::random(n, split_size(n, 0.5), rng());
    try {
      const auto est = cf_split_estimate(data, plan, params, 1e-12);
      const double radius = std::sqrt(*est.discrepancy * f.squared_norm());
      const double err = std::abs(est.value - f.c);
      worst_ratio = std::max(worst_ratio, radius > 0.0 ? err / radius : (err > 0.0 ? INFINITY : 0.0));
      ok += err <= radius * (1.0 + 1e-6);
    } catch (const std::exception& e) {
      std::cout << fmt::format("  instance {} (n={}, d={}): {}\n", t, n, d, e.what());
    }
  }
  return {ok == 100, fmt::format("{}/100 instances within sqrt(D)*||f||; worst error/radius {:.3f}",
                                 ok, worst_ratio)};
}

Outcome mean_element_identity() {
  const auto problem = gaussian_problem(1);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double x = -3.0 + 6.0 * i / 9.0;
    worst = std::max(worst, std::abs(mean_element(std::span<const double>(&x, 1), problem, {0.1, 1.0})));
  }
  return {worst < 1e-8, fmt::format("max |mean element| over 10 points in [-3,3]: {:.2e} (< 1e-8)", worst)};
}

Outcome gradient_check() {
  std::vector<std::string> parts;
  bool pass = true;
  for (std::size_t d : {1u, 2u, 5u}) {
    const double e = max_gradient_error(d, 100, derive_seed(kSeed, {7, d}));
    pass = pass && e < 1e-6;
    parts.push_back(fmt::format("d={} {:.2e}", d, e));
  }
  return {pass, fmt::format("max relative error vs central differences: {} (< 1e-6)", fmt::join(parts, ", "))};
}

Outcome weight_identities() {
  const SteinKernelParams params{0.1, 1.0};
  Rng rng(derive_seed(kSeed, {8}));
  double worst_sum = 0.0, worst_dot = 0.0, worst_reuse = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const std::size_t n = 6 + rng.below(45);
    auto data = kcf::testing::gaussian_dataset(n, d, rng(), [](std::span<const double> x) {
      return std::sin(M_PI * x[0]);
    });
    const auto plan = SplitPlan::random(n, split_size(n, 0.5), rng());
    const Eigen::VectorXd w = cf_weights(data, plan, params);
    const double ef = cf_split_estimate(data, plan, params).value;
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) g[static_cast<Eigen::Index>(i)] = std::exp(-data.point(i)[0] * data.point(i)[0]);
    const double eg = cf_split_estimate(data.with_values(g), plan, params).value;
    worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
    worst_dot = std::max(worst_dot, std::abs(w.dot(data.f_values()) - ef) / std::max(1.0, std::abs(ef)));
    worst_reuse = std::max(worst_reuse, std::abs(w.dot(g) - eg) / std::max(1.0, std::abs(eg)));
  }
  const bool pass = worst_sum < 1e-12 && worst_dot < 1e-10 && worst_reuse < 1e-10;
  return {pass, fmt::format("max |sum w - 1| {:.2e} (< 1e-12); max rel |w.f - estimate| {:.2e} (< 1e-10); "
                            "max rel reuse error on second integrand {:.2e} (< 1e-10)",
                            worst_sum, worst_dot, worst_reuse)};
}

Outcome mock_discrepancy() {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 40; ++n) {
    for (std::size_t m = 1; m < n; ++m) {
      const auto held = static_cast<Eigen::Index>(n - m);
      const auto mm = static_cast<Eigen::Index>(m);
      const SteinMatrixBundle b{Eigen::MatrixXd::Identity(mm, mm), Eigen::MatrixXd::Zero(held, mm),
                                Eigen::MatrixXd::Identity(held, held)};
      const double expected = 1.0 / static_cast<double>(n - m);
      worst = std::max(worst, std::abs(closed_form_discrepancy(b, 0.0) - expected) / expected);
      worst = std::max(worst, std::abs(weight_discrepancy(b, split_weights(b, 0.0)) - expected) / expected);
    }
  }
  return {worst <= 4 * std::numeric_limits<double>::epsilon(),
          fmt::format("mock diagonal kernel, all 2 <= n <= 40, 1 <= m < n: max relative deviation from "
                      "1/(n-m) {:.1e}",
                      worst)};
}

Outcome higher_dimension() {
  const auto r = run_experiment(sin_gaussian(3, {500}, 50, {Method::Mean, Method::CfSimplified}));
  const double mse_mean = r.methods[0].cells[0].mse;
  const double mse_cf = r.methods[1].cells[0].mse;
  return {mse_cf < mse_mean && r.methods[1].cells[0].failures == 0,
          fmt::format("d=3, n=500, 50 replications: MSE cf-simplified {:.3e} < mean {:.3e}", mse_cf, mse_mean)};
}

Outcome zv_exactness() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 3 + static_cast<std::size_t>(s % 97);
    const auto data = kcf::testing::gaussian_dataset(n, 1, derive_seed(kSeed, {11, s}),
                                                     [](std::span<const double> x) { return x[0]; });
    worst = std::max(worst, std::abs(zv_estimate(data, 1).value));
  }
  return {worst < 1e-10, fmt::format("f(x)=x under N(0,1), 100 sample sets: max |ZV1 error| {:.2e} (< 1e-10)", worst)};
}

Outcome determinism() {
  auto config = *builtin_config("paper_d1");
  MethodSpec cv = spec(Method::CfSplit);
  cv.label = "cf-split-cv";
  cv.cv_grid = {{0.1, 0.5}, {0.1, 1.0}, {0.1, 2.0}};
  config.methods.push_back(cv);
  std::string reference_csv, reference_json;
  bool pass = true;
  for (std::size_t threads : {1u, 2u, 4u, 7u}) {
    const auto report = run_experiment(config, {threads});
    std::ostringstream csv;
    write_records_csv(csv, report);
    const std::string json = report_to_json(report).dump(2);
    if (threads == 1) {
      reference_csv = csv.str();
      reference_json = json;
    } else {
      pass = pass && csv.str() == reference_csv && json == reference_json;
    }
  }
  return {pass, fmt::format("bundled paper_d1 study plus a cross-validated method: CSV ({} bytes) and JSON "
                            "identical for 1, 2, 4 and 7 threads",
                            reference_csv.size())};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"convergence-rate slopes", convergence_slopes},
      {"variance ordering", variance_ordering},
      {"simplified-estimator bias", simplified_bias},
      {"split-estimator unbiasedness", split_unbiased},
      {"worst-case error bound", worst_case_bound},
      {"mean-element identity", mean_element_identity},
      {"kernel-gradient correctness", gradient_check},
      {"weight identities", weight_identities},
      {"mock-kernel discrepancy", mock_discrepancy},
      {"higher-dimension sanity", higher_dimension},
      {"ZV exactness", zv_exactness},
      {"determinism across threads", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long k = std::strtol(argv[i], nullptr, 10);
    if (k < 1 || k > static_cast<long>(criteria().size())) {
      std::cerr << "unknown criterion '" << argv[i] << "'\n";
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(k));
  }
  if (selected.empty()) {
    for (std::size_t k = 1; k <= criteria().size(); ++k) selected.push_back(k);
  }
  int failures = 0;
  for (std::size_t k : selected) {
    const auto& c = criteria()[k - 1];
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << fmt::format("{} criterion {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", k, c.name, o.summary)
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
