#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sp/core.hpp"

namespace sp::csv {

// Splits on commas and trims ASCII whitespace around each field.
std::vector<std::string_view> split_fields(std::string_view line);

double parse_double(std::string_view field, const std::filesystem::path& origin, std::size_t line_no);
ClassId parse_id(std::string_view field, const std::filesystem::path& origin, std::size_t line_no);

// Reads every non-empty line of a purely numeric CSV file.
std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path);

// Reads a rectangular numeric CSV into a matrix; all rows must have equal width.
Matrix read_matrix(const std::filesystem::path& path);

std::vector<ClassId> read_id_column(const std::filesystem::path& path);

// Shortest representation that parses back to the identical double.
std::string format(double value);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
void write_id_column(const std::filesystem::path& path, const std::vector<ClassId>& ids);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sp::csv
