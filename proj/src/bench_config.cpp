#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "kcf/bench.hpp"
#include "kcf/errors.hpp"

namespace kcf {
namespace {

using json = nlohmann::json;

class Issues {
 public:
  void add(std::string msg) { list_.push_back(std::move(msg)); }
  bool empty() const noexcept { return list_.empty(); }

  [[noreturn]] void raise(std::string_view what) const {
    std::string msg = fmt::format("invalid {}:", what);
    for (const auto& s : list_) msg += "\n  - " + s;
    throw InvalidInput(msg);
  }

  void check_keys(const json& obj, std::string_view where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.contains(key)) add(fmt::format("{}: unknown key '{}'", where, key));
    }
  }

 private:
  std::vector<std::string> list_;
};

template <typename T>
void read_number(const json& obj, const char* key, std::string_view where, T& out, Issues& issues) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))) {
      issues.add(fmt::format("{}: '{}' must be a non-negative integer", where, key));
      return;
    }
    out = v.get<T>();
  } else {
    if (!v.is_number()) {
      issues.add(fmt::format("{}: '{}' must be a number", where, key));
      return;
    }
    out = v.get<T>();
  }
}

void read_string(const json& obj, const char* key, std::string_view where, std::string& out,
                 Issues& issues) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_string()) {
    issues.add(fmt::format("{}: '{}' must be a string", where, key));
    return;
  }
  out = obj.at(key).get<std::string>();
}

void read_doubles(const json& obj, const char* key, std::string_view where, std::vector<double>& out,
                  Issues& issues) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
    issues.add(fmt::format("{}: '{}' must be an array of numbers", where, key));
    return;
  }
  out = v.get<std::vector<double>>();
}

ProblemSpec parse_problem(const json& j, Issues& issues) {
  ProblemSpec p;
  if (!j.is_object()) {
    issues.add("problem: must be an object");
    return p;
  }
  issues.check_keys(j, "problem", {"target", "dimension", "integrand", "weights", "means", "scales"});
  read_string(j, "target", "problem", p.target, issues);
  read_number(j, "dimension", "problem", p.dimension, issues);
  read_string(j, "integrand", "problem", p.integrand, issues);
  read_doubles(j, "weights", "problem", p.weights, issues);
  read_doubles(j, "means", "problem", p.means, issues);
  read_doubles(j, "scales", "problem", p.scales, issues);
  return p;
}

MethodSpec parse_method_spec(const json& j, std::size_t index, Issues& issues) {
  MethodSpec spec;
  const std::string where = fmt::format("methods[{}]", index);
  if (!j.is_object()) {
    issues.add(where + ": must be an object");
    return spec;
  }
  issues.check_keys(j, where,
                    {"method", "label", "alpha1", "alpha2", "cv_grid", "cv_train_fraction", "lambda"});
  std::string tag;
  read_string(j, "method", where, tag, issues);
  if (!j.contains("method")) {
    issues.add(where + ": missing 'method'");
  } else if (const auto m = parse_method(tag)) {
    spec.method = *m;
  } else if (j.at("method").is_string()) {
    issues.add(fmt::format("{}: unknown method '{}'", where, tag));
  }
  spec.label = tag;
  read_string(j, "label", where, spec.label, issues);
  read_number(j, "alpha1", where, spec.params.alpha1, issues);
  read_number(j, "alpha2", where, spec.params.alpha2, issues);
  read_number(j, "cv_train_fraction", where, spec.cv_train_fraction, issues);
  if (j.contains("lambda")) {
    double lam = 0.0;
    read_number(j, "lambda", where, lam, issues);
    spec.lambda = lam;
  }
  if (j.contains("cv_grid")) {
    const json& g = j.at("cv_grid");
    bool ok = g.is_array();
    if (ok) {
      for (const json& e : g) {
        if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
          spec.cv_grid.push_back({e[0].get<double>(), e[1].get<double>()});
        } else {
          ok = false;
        }
      }
    }
    if (!ok) issues.add(where + ": 'cv_grid' must be an array of [alpha1, alpha2] pairs");
  }
  return spec;
}

void collect_validation(const ExperimentConfig& c, Issues& issues) {
  if (c.problem.target != "gaussian" && c.problem.target != "mixture") {
    issues.add(fmt::format("problem.target: unknown target '{}'", c.problem.target));
  }
  if (c.problem.dimension < 1) issues.add("problem.dimension: must be at least 1");
  if (c.problem.target == "mixture") {
    if (c.problem.dimension != 1) issues.add("problem.dimension: mixture targets are one-dimensional");
    if (c.problem.weights.empty() || c.problem.weights.size() != c.problem.means.size() ||
        c.problem.weights.size() != c.problem.scales.size()) {
      issues.add("problem: mixture needs weights, means and scales of equal non-zero length");
    }
  }
  if (const auto& f = c.problem.integrand; f != "sin" && f != "sum" && f != "square" && f != "one") {
    issues.add(fmt::format("problem.integrand: unknown integrand '{}'", f));
  }
  if (c.n_grid.empty()) issues.add("n_grid: must not be empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 2) issues.add(fmt::format("n_grid[{}]: sample sizes must be >= 2", i));
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) {
      issues.add(fmt::format("n_grid[{}]: sizes must be strictly ascending", i));
    }
  }
  if (c.replications < 1) issues.add("replications: must be at least 1");
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) {
    issues.add("split_fraction: must lie in (0, 1)");
  }
  if (c.n_splits < 1) issues.add("n_splits: must be at least 1");
  if (c.methods.empty()) issues.add("methods: must not be empty");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    const MethodSpec& m = c.methods[i];
    if (!labels.insert(m.label).second) {
      issues.add(fmt::format("methods[{}]: duplicate label '{}'", i, m.label));
    }
    if (!(m.params.alpha1 > 0.0) || !(m.params.alpha2 > 0.0)) {
      issues.add(fmt::format("methods[{}]: alpha1 and alpha2 must be positive", i));
    }
    for (const auto& g : m.cv_grid) {
      if (!(g.alpha1 > 0.0) || !(g.alpha2 > 0.0)) {
        issues.add(fmt::format("methods[{}]: cv_grid entries must be positive", i));
        break;
      }
    }
    if (!(m.cv_train_fraction > 0.0 && m.cv_train_fraction < 1.0)) {
      issues.add(fmt::format("methods[{}]: cv_train_fraction must lie in (0, 1)", i));
    }
    if (m.lambda && !(*m.lambda >= 0.0 && std::isfinite(*m.lambda))) {
      issues.add(fmt::format("methods[{}]: lambda must be non-negative", i));
    }
    if (m.method == Method::Riemann && c.problem.dimension != 1) {
      issues.add(fmt::format("methods[{}]: riemann is only available for d = 1", i));
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  Issues issues;
  collect_validation(*this, issues);
  if (!issues.empty()) issues.raise("experiment config");
}

ExperimentConfig parse_experiment_config(const json& j) {
  Issues issues;
  ExperimentConfig c;
  if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
  issues.check_keys(j, "config",
                    {"name", "problem", "n_grid", "replications", "methods", "master_seed",
                     "split_fraction", "n_splits"});
  read_string(j, "name", "config", c.name, issues);
  if (j.contains("problem")) {
    c.problem = parse_problem(j.at("problem"), issues);
  } else {
    issues.add("config: missing 'problem'");
  }
  if (j.contains("n_grid")) {
    const json& g = j.at("n_grid");
    if (g.is_array() && std::all_of(g.begin(), g.end(), [](const json& e) {
          return e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0);
        })) {
      c.n_grid = g.get<std::vector<std::size_t>>();
    } else {
      issues.add("config: 'n_grid' must be an array of non-negative integers");
    }
  } else {
    issues.add("config: missing 'n_grid'");
  }
  read_number(j, "replications", "config", c.replications, issues);
  read_number(j, "master_seed", "config", c.master_seed, issues);
  read_number(j, "split_fraction", "config", c.split_fraction, issues);
  read_number(j, "n_splits", "config", c.n_splits, issues);
  if (j.contains("methods")) {
    const json& ms = j.at("methods");
    if (ms.is_array()) {
      for (std::size_t i = 0; i < ms.size(); ++i) c.methods.push_back(parse_method_spec(ms[i], i, issues));
    } else {
      issues.add("config: 'methods' must be an array");
    }
  } else {
    issues.add("config: missing 'methods'");
  }
  collect_validation(c, issues);
  if (!issues.empty()) issues.raise("experiment config");
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json problem = {{"target", c.problem.target},
                  {"dimension", c.problem.dimension},
                  {"integrand", c.problem.integrand}};
  if (c.problem.target == "mixture") {
    problem["weights"] = c.problem.weights;
    problem["means"] = c.problem.means;
    problem["scales"] = c.problem.scales;
  }
  json methods = json::array();
  for (const MethodSpec& m : c.methods) {
    json jm = {{"method", std::string(method_name(m.method))}, {"label", m.label}};
    if (is_control_functional(m.method)) {
      jm["alpha1"] = m.params.alpha1;
      jm["alpha2"] = m.params.alpha2;
      if (!m.cv_grid.empty()) {
        json grid = json::array();
        for (const auto& g : m.cv_grid) grid.push_back({g.alpha1, g.alpha2});
        jm["cv_grid"] = grid;
        jm["cv_train_fraction"] = m.cv_train_fraction;
      }
      if (m.lambda) jm["lambda"] = *m.lambda;
    }
    methods.push_back(jm);
  }
  return {{"name", c.name},
          {"problem", problem},
          {"n_grid", c.n_grid},
          {"replications", c.replications},
          {"master_seed", c.master_seed},
          {"split_fraction", c.split_fraction},
          {"n_splits", c.n_splits},
          {"methods", methods}};
}

namespace {

ExperimentConfig bundled_config(std::size_t d) {
  ExperimentConfig c;
  c.name = fmt::format("paper_d{}", d);
  c.problem.target = "gaussian";
  c.problem.dimension = d;
  c.problem.integrand = "sin";
  c.n_grid = {10, 25, 50, 100, 200, 500};
  c.replications = 100;
  c.master_seed = 20150101;
  c.split_fraction = 0.5;
  c.n_splits = 1;
  const SteinKernelParams params{0.1, 1.0};
  c.methods.push_back({"mean", Method::Mean, params, {}, 0.5, std::nullopt});
  if (d == 1) c.methods.push_back({"riemann", Method::Riemann, params, {}, 0.5, std::nullopt});
  c.methods.push_back({"zv2", Method::Zv2, params, {}, 0.5, std::nullopt});
  c.methods.push_back({"cf-split", Method::CfSplit, params, {}, 0.5, std::nullopt});
  c.methods.push_back({"cf-simplified", Method::CfSimplified, params, {}, 0.5, std::nullopt});
  return c;
}

}  // namespace

std::optional<ExperimentConfig> builtin_config(std::string_view name) {
  if (name == "paper_d1") return bundled_config(1);
  if (name == "paper_d3") return bundled_config(3);
  if (name == "paper_d5") return bundled_config(5);
  return std::nullopt;
}

std::vector<std::string> builtin_config_names() { return {"paper_d1", "paper_d3", "paper_d5"}; }

}  // namespace kcf
