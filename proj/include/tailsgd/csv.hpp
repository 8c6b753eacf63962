#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tailsgd {

// Shortest round-trip decimal form (std::to_chars); "nan"/"inf"/"-inf" for
// non-finite values. Used everywhere a double lands in a CSV cell so outputs
// are byte-reproducible.
std::string format_double(double x);
std::string format_int(long long x);

// Minimal CSV assembler: optional leading "# key: value" metadata lines, one
// header row, then data rows of exactly the header's width. Metadata must be
// written before the header.
class CsvWriter {
 public:
  void meta(std::string_view key, std::string_view value);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::size_t n_columns_ = 0;
  bool header_written_ = false;
};

// Writes contents to path, throwing std::runtime_error on any IO failure.
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace tailsgd
