#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proxdist {

/// Input file could not be opened.
struct FileOpenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input file opened but its contents do not parse.
struct CsvFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form (locale independent); NaN prints "nan".
std::string format_double(double v);

double parse_double(std::string_view s, const char* context);

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had none
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace proxdist
