#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rcgrid::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kIo = 3,
  kSolver = 4,
  kPartialFailure = 5,
};

struct Options {
  std::string command;  // dgp | fit | diagnose | mc
  std::filesystem::path config;
  std::filesystem::path out = ".";
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
  bool pcr = false;
  std::optional<long> p;
};

/// Runs one command; progress goes to `log`, error messages to `err`.
int run(const Options& options, std::ostream& log, std::ostream& err);

/// Parses argv and dispatches to run().
int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace rcgrid::cli
