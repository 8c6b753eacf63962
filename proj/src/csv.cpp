#include "tailsgd/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace tailsgd {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (res.ec != std::errc{}) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf.data(), res.ptr);
}

std::string format_int(long long x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (res.ec != std::errc{}) {
    throw std::runtime_error("format_int: conversion failed");
  }
  return std::string(buf.data(), res.ptr);
}

void CsvWriter::meta(std::string_view key, std::string_view value) {
  if (header_written_) {
    throw std::logic_error("CsvWriter: metadata must precede the header");
  }
  out_ += "# ";
  out_ += key;
  out_ += ": ";
  out_ += value;
  out_ += '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  if (header_written_) {
    throw std::logic_error("CsvWriter: header already written");
  }
  if (columns.empty()) {
    throw std::logic_error("CsvWriter: header needs at least one column");
  }
  n_columns_ = columns.size();
  header_written_ = true;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ += ',';
    out_ += columns[i];
  }
  out_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (!header_written_) {
    throw std::logic_error("CsvWriter: row before header");
  }
  if (cells.size() != n_columns_) {
    throw std::logic_error("CsvWriter: row width does not match header");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_text_file: cannot open " + path);
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) {
    throw std::runtime_error("write_text_file: write failed for " + path);
  }
}

}  // namespace tailsgd
