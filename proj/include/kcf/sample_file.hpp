#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "kcf/dataset.hpp"
#include "kcf/errors.hpp"

namespace kcf {

/// Error in a sample table; `line()` is 1-based, 0 when not tied to a line.
class SampleFileError : public InvalidInput {
 public:
  SampleFileError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Comma-separated table with a header naming the columns x_1..x_d, f and
/// u_1..u_d (any order). Blank lines and lines starting with '#' are skipped.
ScoredDataset parse_sample_table(std::istream& in);
ScoredDataset read_sample_file(const std::filesystem::path& path);

/// Writes the canonical column order with round-trip precision.
void write_sample_table(std::ostream& out, const ScoredDataset& data);
void write_sample_file(const std::filesystem::path& path, const ScoredDataset& data);

}  // namespace kcf
