#include "empo/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace empo {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  // %.17g always round-trips; try shorter forms first.
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) break;
  }
  return buffer;
}

void write_pgm(const std::filesystem::path& file, int width, int height,
               std::span<const double> values) {
  if (static_cast<std::size_t>(width) * height != values.size()) {
    throw std::invalid_argument("write_pgm: dimensions do not match value count");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = !(hi > lo);

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + file.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> row(width);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      const double v = values[static_cast<std::size_t>(y) * width + x];
      unsigned char byte = 0;
      if (!std::isnan(v)) {
        byte = flat ? 255
                    : static_cast<unsigned char>(
                          std::lround(255.0 * (v - lo) / (hi - lo)));
      }
      row[x] = byte;
    }
    out.write(reinterpret_cast<const char*>(row.data()), width);
  }
}

void write_csv(const std::filesystem::path& file, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write csv: " + file.string());
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      if (!std::isnan(row[i])) out << format_double(row[i]);
    }
    out << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + file.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + file.string());
  out << text;
}

std::string file_checksum(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for checksum: " + file.string());
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

}  // namespace empo
