#include "proxdist/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace proxdist {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, const char* context) {
  // Trim surrounding whitespace; std::from_chars accepts no leading blanks.
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos)
    throw CsvFormatError(std::string(context) + ": empty numeric field");
  s = s.substr(b, e - b + 1);
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw CsvFormatError(std::string(context) + ": cannot parse '" + std::string(s) + "' as a number");
  return v;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

bool looks_numeric(const std::string& field) {
  try {
    parse_double(field, "sniff");
    return true;
  } catch (const CsvFormatError&) {
    return false;
  }
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileOpenError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (first) {
      first = false;
      if (!looks_numeric(fields.front())) {
        table.header = std::move(fields);
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(fields.size());
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    for (const auto& f : fields) row.push_back(parse_double(f, ctx.c_str()));
    if (!table.rows.empty() && row.size() != table.rows.front().size())
      throw CsvFormatError(ctx + ": expected " + std::to_string(table.rows.front().size()) +
                           " fields, got " + std::to_string(row.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileOpenError("cannot write '" + path.string() + "'");
  out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileOpenError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace proxdist
