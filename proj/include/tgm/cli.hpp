#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tgm {

struct RunOptions {
  std::vector<std::string> sets;      // dotted-path overrides, "task.seed=7"
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // replaces task.seed after overrides
  std::string expect_kind;            // non-empty: reject other task kinds
};

// Loads config_ref (a file path, or the name of a bundled experiment),
// applies the overrides, runs the task, and writes <prefix>_*.csv plus
// <prefix>_report.json under out_dir.  Returns 0 on success, 1 when the
// task's tolerance check fails, 2 on a malformed config or unknown name,
// 3 on semantically invalid values.
int run_experiment(const std::string& config_ref, const RunOptions& opts,
                   std::ostream& log);

int run_cli(int argc, char** argv);

}  // namespace tgm
