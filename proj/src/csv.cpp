#include "sp/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sp::csv {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string where(const std::filesystem::path& origin, std::size_t line_no) {
  return origin.string() + ":" + std::to_string(line_no);
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view field, const std::filesystem::path& origin, std::size_t line_no) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail("malformed number '" + std::string(field) + "' at " + where(origin, line_no));
  }
  return value;
}

ClassId parse_id(std::string_view field, const std::filesystem::path& origin, std::size_t line_no) {
  ClassId value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail("malformed class id '" + std::string(field) + "' at " + where(origin, line_no));
  }
  return value;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("missing file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write file: " + path.string());
  out << text;
  if (!out) fail("write failed: " + path.string());
}

std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (auto field : split_fields(line)) row.push_back(parse_double(field, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix read_matrix(const std::filesystem::path& path) {
  const auto rows = read_numeric(path);
  if (rows.empty()) return Matrix(0, 0);
  const auto width = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      fail("dimension mismatch in " + path.string() + ": row " + std::to_string(r + 1) + " has " +
           std::to_string(rows[r].size()) + " columns, expected " + std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<ClassId> read_id_column(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<ClassId> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = trim(line);
    if (field.empty()) continue;
    ids.push_back(parse_id(field, path, line_no));
  }
  return ids;
}

std::string format(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail("cannot format number");
  return std::string(buf, ptr);
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format(m(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_id_column(const std::filesystem::path& path, const std::vector<ClassId>& ids) {
  std::string out;
  for (auto id : ids) {
    out += std::to_string(id);
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace sp::csv
