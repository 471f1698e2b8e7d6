#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tabula {

/// Exit statuses of the command-line tool.
enum ExitStatus : int {
  kExitOk = 0,           // success, or the artifact conforms
  kExitDiagnostics = 1,  // diagnostics, violations or a refused edit
  kExitUsage = 2,        // bad usage, unreadable files, syntax errors
};

/// Runs one invocation; `args` excludes the program name. Diagnostics go to `out`,
/// one per line as `KIND addr message`; errors and usage go to `err`.
///
///   validate <model.tbl>
///   metrics <model.tbl>
///   create <model.tbl> -o <inst.json>
///   check <model.tbl> <inst.json>
///   recalc <inst.json>
///   export <inst.json> --mode values|formulas [-o <file.csv>]
///   apply-model <model.tbl> <ops.txt> [--sync <inst.json>] [--force]
///   apply-instance <model.tbl> <inst.json> <ops.txt>
///   serve --model <m> [--instance <i>] [--port <n>] [--host <h>] [--static <dir>] [--save]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tabula
