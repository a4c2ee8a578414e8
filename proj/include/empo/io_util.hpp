#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace empo {

// Shortest round-trip decimal representation; "." decimal point, "nan" for
// missing values. Keeps artifacts byte-stable across runs.
std::string format_double(double value);

// Binary P5, 8-bit, min-max normalized per map; NaN cells map to 0. Values
// are laid out row-major with row 0 at the bottom, written top row first.
void write_pgm(const std::filesystem::path& file, int width, int height,
               std::span<const double> values);

// Header + one line per row; NaN renders as an empty field.
void write_csv(const std::filesystem::path& file, const std::string& header,
               const std::vector<std::vector<double>>& rows);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

// FNV-1a 64-bit over the file bytes, rendered as 16 hex digits.
std::string file_checksum(const std::filesystem::path& file);

}  // namespace empo
