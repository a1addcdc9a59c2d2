#pragma once

// Implementation of the cvqkd subcommands. Each command computes its complete output
// in memory first; nothing is written unless the whole computation succeeded.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cvqkd {

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  /// stats: the sample file; daily: the C_n^2 series (overrides daily.series).
  std::optional<std::filesystem::path> input;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;  // Monte Carlo sample count
  unsigned jobs = 1;
  bool trace = false;
  std::size_t bins = 0;  // stats: histogram bins, 0 for none
};

struct OutputFile {
  std::filesystem::path path;
  std::string content;
};

struct CommandOutput {
  std::string stdout_text;
  std::vector<OutputFile> files;
};

CommandOutput run_simulate(const CommandOptions& options);
CommandOutput run_stats(const CommandOptions& options);
CommandOutput run_keyrate(const CommandOptions& options);
CommandOutput run_optimize(const CommandOptions& options);
CommandOutput run_sweep(const CommandOptions& options);
CommandOutput run_daily(const CommandOptions& options);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// 2 for configuration errors, 4 for I/O errors, 3 for every other library error.
int exit_code_for(const std::exception& error);

/// Runs `command`, writes its files and stdout text, reports errors on `err`.
int run_command(std::string_view command, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace cvqkd
