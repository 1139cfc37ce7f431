#pragma once

#include <iosfwd>

namespace tbrelay::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

/// Full command-line entry point; `out` receives the human-readable summary,
/// `err` the diagnostics. Data files go to --out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tbrelay::cli
