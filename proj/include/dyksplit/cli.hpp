#pragma once

// Command implementations behind the dyksplit executable. Each returns the
// process exit code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace dyksplit {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIterationCap = 2, kExitInfeasible = 3 };

struct CliOptions {
  bool auto_defer = false;
  bool report = false;
  std::optional<std::uint64_t> seed;  // replaces problem.random.seed
  std::optional<int> workers;         // replaces solve.workers
  std::ostream* out = nullptr;        // defaults to std::cout
  std::ostream* err = nullptr;        // defaults to std::cerr
};

int cmd_solve(const std::string& config_path, const CliOptions& options);
int cmd_validate(const std::string& config_path, const CliOptions& options);
int cmd_compare(const std::string& config_a, const std::string& config_b, const CliOptions& options);
int cmd_oracle(const std::string& config_path, const CliOptions& options);

}  // namespace dyksplit
