#include "kcf/sample_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <fmt/format.h>

namespace kcf {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool skip_line(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

// Column role: 0 = x, 1 = f, 2 = u; plus 0-based coordinate.
struct Column {
  int role;
  std::size_t coord;
};

std::optional<std::size_t> coordinate(std::string_view name, std::string_view prefix) {
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = name.substr(prefix.size());
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1 || digits.front() == '0') {
    return std::nullopt;
  }
  return k - 1;
}

}  // namespace

SampleFileError::SampleFileError(std::size_t line, const std::string& message)
    : InvalidInput(line > 0 ? fmt::format("line {}: {}", line, message) : message), line_(line) {}

ScoredDataset parse_sample_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++lineno;
    have_header = !skip_line(line);
  }
  if (!have_header) throw SampleFileError(0, "sample table is empty (no header row)");

  const auto names = split_fields(line);
  std::vector<Column> columns;
  std::map<std::string, std::size_t> seen;
  for (const auto name : names) {
    if (!seen.emplace(std::string(name), columns.size()).second) {
      throw SampleFileError(lineno, fmt::format("duplicate column '{}'", name));
    }
    if (name == "f") {
      columns.push_back({1, 0});
    } else if (const auto k = coordinate(name, "x_")) {
      columns.push_back({0, *k});
    } else if (const auto k = coordinate(name, "u_")) {
      columns.push_back({2, *k});
    } else {
      throw SampleFileError(lineno, fmt::format("unknown column '{}' (expected x_i, f, u_i)", name));
    }
  }
  std::size_t nx = 0;
  std::size_t nu = 0;
  std::size_t nf = 0;
  for (const Column& c : columns) (c.role == 0 ? nx : c.role == 1 ? nf : nu)++;
  if (nf != 1) throw SampleFileError(lineno, "header must contain exactly one 'f' column");
  if (nx == 0 || nx != nu) {
    throw SampleFileError(lineno, fmt::format("header has {} x columns and {} u columns", nx, nu));
  }
  const std::size_t d = nx;
  for (const Column& c : columns) {
    if (c.coord >= d) {
      throw SampleFileError(lineno, fmt::format("column index {} exceeds dimension {}", c.coord + 1, d));
    }
  }

  std::vector<double> xs;
  std::vector<double> us;
  std::vector<double> fs;
  std::vector<double> row(columns.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns.size()) {
      throw SampleFileError(lineno, fmt::format("expected {} fields, found {}", columns.size(), fields.size()));
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto field = fields[k];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw SampleFileError(lineno, fmt::format("field {} ('{}') is not a finite number",
                                                  names[k], field));
      }
      row[k] = v;
    }
    const std::size_t base = fs.size();
    xs.resize((base + 1) * d);
    us.resize((base + 1) * d);
    fs.push_back(0.0);
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const Column& c = columns[k];
      if (c.role == 0) xs[base * d + c.coord] = row[k];
      if (c.role == 1) fs[base] = row[k];
      if (c.role == 2) us[base * d + c.coord] = row[k];
    }
  }
  if (fs.empty()) throw SampleFileError(lineno, "sample table has a header but no rows");

  const auto n = static_cast<Eigen::Index>(fs.size());
  const auto dd = static_cast<Eigen::Index>(d);
  RowMatrix points = Eigen::Map<const RowMatrix>(xs.data(), n, dd);
  RowMatrix scores = Eigen::Map<const RowMatrix>(us.data(), n, dd);
  Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(fs.data(), n);
  return {std::move(points), std::move(scores), std::move(f)};
}

ScoredDataset read_sample_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SampleFileError(0, fmt::format("cannot open sample file '{}'", path.string()));
  return parse_sample_table(in);
}

void write_sample_table(std::ostream& out, const ScoredDataset& data) {
  const std::size_t d = data.dim();
  for (std::size_t k = 0; k < d; ++k) out << "x_" << k + 1 << ',';
  out << 'f';
  for (std::size_t k = 0; k < d; ++k) out << ",u_" << k + 1;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const double x : data.point(i)) out << fmt::format("{:.17g},", x);
    out << fmt::format("{:.17g}", data.f(i));
    for (const double u : data.score(i)) out << fmt::format(",{:.17g}", u);
    out << '\n';
  }
}

void write_sample_file(const std::filesystem::path& path, const ScoredDataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write sample file '{}'", path.string()));
  write_sample_table(out, data);
}

}  // namespace kcf
