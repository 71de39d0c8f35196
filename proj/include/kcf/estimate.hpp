#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace kcf {

enum class Method {
  CfSplit,
  CfSimplified,
  CfMultisplit,
  Mean,
  Zv1,
  Zv2,
  Riemann,
};

/// Stable tag used on the command line, in configs and in reports.
std::string_view method_name(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;
bool is_control_functional(Method method) noexcept;

/// Result of a single estimator run.
struct Estimate {
  double value = 0.0;
  Method method = Method::Mean;
  double lambda_used = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<double> term_star;       // mean residual on the evaluation half
  std::optional<double> term_star_star;  // fitted constant ĉ
  std::optional<double> discrepancy;     // squared worst-case error per unit H+ norm
  std::optional<std::size_t> n_splits;
};

}  // namespace kcf
