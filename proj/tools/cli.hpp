#pragma once

namespace xrn::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // numeric or internal failure
inline constexpr int kUsage = 2;    // usage or configuration error

/// Parses argv and runs one subcommand. Diagnostics go to stderr.
int run(int argc, char** argv);

}  // namespace xrn::cli
