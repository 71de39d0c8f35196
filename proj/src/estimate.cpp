#include "kcf/estimate.hpp"

#include <array>
#include <utility>

namespace kcf {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kNames{{
    {Method::CfSplit, "cf-split"},
    {Method::CfSimplified, "cf-simplified"},
    {Method::CfMultisplit, "cf-multisplit"},
    {Method::Mean, "mean"},
    {Method::Zv1, "zv1"},
    {Method::Zv2, "zv2"},
    {Method::Riemann, "riemann"},
}};

}  // namespace

std::string_view method_name(Method method) noexcept {
  for (const auto& [m, name] : kNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (const auto& [m, tag] : kNames) {
    if (tag == name) return m;
  }
  return std::nullopt;
}

bool is_control_functional(Method method) noexcept {
  return method == Method::CfSplit || method == Method::CfSimplified ||
         method == Method::CfMultisplit;
}

}  // namespace kcf
