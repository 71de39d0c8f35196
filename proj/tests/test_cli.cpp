#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kcf/cli.hpp"
#include "kcf/sample_file.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = kcf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) : path_(fs::temp_directory_path() / ("kcf_cli_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double value_of(const std::string& text) {
  const auto pos = text.find("value: ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + 7));
}

const std::string kTinyConfig = R"({
  "name": "tiny",
  "problem": {"target": "gaussian", "dimension": 1, "integrand": "sin"},
  "n_grid": [10, 20, 30],
  "replications": 6,
  "master_seed": 5,
  "methods": [
    {"method": "mean"},
    {"method": "cf-simplified", "alpha1": 0.1, "alpha2": 1.0},
    {"method": "cf-split", "label": "split-cv", "cv_grid": [[0.1, 0.5], [0.1, 1.0]]}
  ]
})";

}  // namespace

TEST_CASE("estimate with the sample mean") {
  TempDir dir("mean");
  write(dir / "c.csv", "x_1,f,u_1\n0.1,4.5,-0.1\n-2,4.5,2\n3,4.5,-3\n");
  const auto r = run({"estimate", (dir / "c.csv").string(), "--method", "mean"});
  CHECK(r.code == 0);
  CHECK(value_of(r.out) == 4.5);
}

TEST_CASE("malformed rows are data errors naming the row") {
  TempDir dir("bad");
  write(dir / "b.csv", "x_1,f,u_1\n0.1,1,-0.1\n0.2,abc,-0.2\n");
  const auto r = run({"estimate", (dir / "b.csv").string(), "--method", "mean"});
  CHECK(r.code == kcf::cli::kDataError);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(run({"estimate", (dir / "missing.csv").string()}).code == kcf::cli::kDataError);
}

TEST_CASE("usage errors") {
  TempDir dir("usage");
  write(dir / "c.csv", "x_1,f,u_1\n0.1,1,-0.1\n0.2,2,-0.2\n0.5,2,-0.5\n");
  const std::string file = (dir / "c.csv").string();
  CHECK(run({"estimate", file, "--method", "mean", "--alpha1", "0.2"}).code == kcf::cli::kUsageError);
  CHECK(run({"estimate", file, "--method", "cf-split", "--splits", "3"}).code == kcf::cli::kUsageError);
  CHECK(run({"estimate", file, "--method", "cf-split", "--bound"}).code == kcf::cli::kUsageError);
  CHECK(run({"estimate", file, "--method", "magic"}).code == kcf::cli::kUsageError);
  CHECK(run({"estimate", file, "--lambda", "big"}).code == kcf::cli::kUsageError);
  CHECK(run({"estimate", file, "--output", "xml"}).code == kcf::cli::kUsageError);
  CHECK(run({"frobnicate"}).code == kcf::cli::kUsageError);
  CHECK(run({}).code == kcf::cli::kUsageError);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("json output carries a schema version") {
  TempDir dir("json");
  write(dir / "c.csv", "x_1,f,u_1\n0.1,1,-0.1\n0.2,2,-0.2\n0.5,2,-0.5\n-1,0,1\n");
  const auto r = run({"estimate", (dir / "c.csv").string(), "--method", "cf-split", "--output", "json",
                      "--bound", "--fnorm", "2"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("method") == "cf-split");
  CHECK(j.at("m") == 2);
  CHECK(j.at("value").get<double>() ==
        doctest::Approx(j.at("term_star").get<double>() + j.at("term_star_star").get<double>()));
  CHECK(j.at("error_bound").get<double>() == doctest::Approx(2.0 * std::sqrt(j.at("discrepancy").get<double>())));
}

TEST_CASE("bench dry run writes nothing") {
  TempDir dir("dry");
  write(dir / "tiny.json", kTinyConfig);
  const auto out = dir / "out";
  const auto r = run({"bench", (dir / "tiny.json").string(), "--dry-run", "--out-dir", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("54 cells") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  CHECK(run({"bench", "paper_d1", "--dry-run"}).code == 0);
}

TEST_CASE("bench config problems") {
  TempDir dir("badcfg");
  write(dir / "broken.json", "{\"name\": ");
  write(dir / "invalid.json", R"({"name": "x", "problem": {"target": "gaussian"}, "n_grid": [1], "methods": []})");
  CHECK(run({"bench", (dir / "broken.json").string(), "--dry-run"}).code == kcf::cli::kDataError);
  const auto r = run({"bench", (dir / "invalid.json").string(), "--dry-run"});
  CHECK(r.code == kcf::cli::kDataError);
  CHECK(r.err.find("n_grid[0]") != std::string::npos);
  CHECK(run({"bench", (dir / "nothing.json").string()}).code == kcf::cli::kUsageError);
}

TEST_CASE("bench output does not depend on thread count") {
  TempDir dir("threads");
  write(dir / "tiny.json", kTinyConfig);
  const auto a = dir / "a";
  const auto b = dir / "b";
  REQUIRE(run({"bench", (dir / "tiny.json").string(), "--out-dir", a.string(), "--threads", "1"}).code == 0);
  REQUIRE(run({"bench", (dir / "tiny.json").string(), "--out-dir", b.string(), "--threads", "8"}).code == 0);
  CHECK(slurp(a / "tiny_records.csv") == slurp(b / "tiny_records.csv"));
  CHECK(slurp(a / "tiny_summary.json") == slurp(b / "tiny_summary.json"));
  CHECK(slurp(a / "tiny_records.csv").find("split-cv,30,5,") != std::string::npos);
}

TEST_CASE("emitted samples feed back into estimate") {
  TempDir dir("emit");
  const std::string cfg = R"({
    "name": "emit",
    "problem": {"target": "gaussian", "dimension": 1, "integrand": "sin"},
    "n_grid": [10, 50, 100],
    "replications": 1,
    "master_seed": 11,
    "methods": [{"method": "mean"}]
  })";
  write(dir / "emit.json", cfg);
  REQUIRE(run({"bench", (dir / "emit.json").string(), "--out-dir", dir.path().string(), "--emit-samples"}).code == 0);
  const auto sample = dir / "emit_samples" / "n100_r0.csv";
  REQUIRE(fs::exists(sample));
  const auto cf = run({"estimate", sample.string(), "--method", "cf-simplified", "--alpha1", "0.1", "--alpha2", "1"});
  REQUIRE(cf.code == 0);
  const auto mean = run({"estimate", sample.string(), "--method", "mean"});
  CHECK(std::abs(value_of(cf.out)) < 0.01);
  CHECK(std::abs(value_of(cf.out)) < std::abs(value_of(mean.out)));
}

TEST_CASE("cross-validated estimate reports the chosen entry") {
  TempDir dir("cv");
  const kcf::RowMatrix x = Eigen::VectorXd::LinSpaced(30, -2.0, 2.0);
  const kcf::ScoredDataset data(x, -x, x.col(0).array().sin().matrix());
  kcf::write_sample_file(dir / "s.csv", data);
  write(dir / "grid.txt", "# alpha1 alpha2\n0.1 0.05\n0.1, 1.0\n");
  const auto r = run({"estimate", (dir / "s.csv").string(), "--cv-grid", (dir / "grid.txt").string(), "--output", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("cv_grid_index") == 1);
  CHECK(j.at("alpha2") == 1.0);
}

TEST_CASE("diagnose") {
  const auto ok = run({"diagnose"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("status: ok") != std::string::npos);
  CHECK(run({"diagnose", "--target", "mixture"}).code == 0);
  CHECK(run({"diagnose", "--dim", "3", "--samples", "50"}).code == 0);
  CHECK(run({"diagnose", "--target", "banana"}).code == kcf::cli::kUsageError);
}
