#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fracbayes {

// Exit codes shared by every subcommand: 0 success, 1 assertion failure,
// 2 config error, 3 runtime failure.
enum ExitCode { kOk = 0, kAssertionFailed = 1, kConfigError = 2, kRuntimeFailure = 3 };

struct CliOptions {
  std::optional<std::uint64_t> seed_override;  // --seed beats FRACBAYES_SEED beats config
  std::optional<int> jobs_override;
  std::string only;     // verify-lemmas: run a single lemma id
  bool dry_run = false; // studies: print the resolved grid, no computation
};

int cmd_simulate(const std::string& config_path, const CliOptions& opts = {});
int cmd_verify_lemmas(const std::string& config_path, const CliOptions& opts = {});
int cmd_rate_study(const std::string& config_path, const CliOptions& opts = {});
int cmd_misspec_study(const std::string& config_path, const CliOptions& opts = {});

}  // namespace fracbayes
