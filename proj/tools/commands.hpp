#pragma once

#include <iosfwd>

namespace lagfactor::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2; // bad flags, config, shapes, parse errors
inline constexpr int kNumeric = 3;
inline constexpr int kIo = 4;

/// Runs one invocation of the `lagfactor` tool. Artifacts go to --out-dir;
/// human-readable progress goes to `out`; on failure a single JSON object
/// {"error": {...}} is written to `err` and the matching status returned.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace lagfactor::cli
