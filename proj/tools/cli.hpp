#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lorentz::cli {

/// Exit statuses of the batch front-end.
enum Exit : int { kOk = 0, kConfigError = 1, kPrecondition = 2, kAssertFailed = 3 };

/// Runs one subcommand. `args` excludes the program name. Artifacts go to `--out` when given,
/// otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lorentz::cli
