#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <ppcr/registration.hpp>

namespace ppcr::cli {

/// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,
  kNoOverlap = 3,
  kIterationCap = 4,
  kOutputError = 5,
  kAllFailed = 6,
};

struct CliInvocation {
  std::string subcommand;

  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::filesystem::path> initial_guess;
  std::optional<std::string> format;

  std::filesystem::path manifest;
  std::optional<std::filesystem::path> output_dir;
  int jobs = 1;

  std::optional<std::filesystem::path> output_transform;
  std::optional<std::filesystem::path> output_trace;
  std::optional<std::filesystem::path> output_table;

  // Synthetic generation.
  std::string shape = "cube";
  std::size_t count = 2000;
  double angle_deg = 10.0;
  double translation = 0.05;
  std::uint64_t seed = 0;

  RegistrationConfig config;
};

/// Parses argv and dispatches. Output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_register(const CliInvocation& invocation, std::ostream& out, std::ostream& err);
int run_compare_criteria(const CliInvocation& invocation, std::ostream& out, std::ostream& err);
int run_batch(const CliInvocation& invocation, std::ostream& out, std::ostream& err);
int run_synth(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

}  // namespace ppcr::cli
