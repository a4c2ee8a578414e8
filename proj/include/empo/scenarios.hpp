#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace empo::cli {

inline constexpr const char* kToolName = "empo";
inline constexpr const char* kToolVersion = "0.1.0";

struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

// Exit codes: 0 success, 1 computation error, 2 invalid configuration.
int run(const std::filesystem::path& config_file, const Overrides& overrides,
        std::ostream& out, std::ostream& err);

// Dry run: validates the configuration and prints the fully resolved
// parameter set, defaults included. Writes nothing.
int verify(const std::filesystem::path& config_file, const Overrides& overrides,
           std::ostream& out, std::ostream& err);

}  // namespace empo::cli
