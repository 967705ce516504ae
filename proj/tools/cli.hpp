#pragma once

#include <iosfwd>

namespace nlcap::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 2;
inline constexpr int kSignaling = 3;
inline constexpr int kNoConvergence = 4;
inline constexpr int kIo = 5;

// Runs one command line. Results go to `out`, diagnostics and progress to
// `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nlcap::cli
