#pragma once

namespace cdr {

/// Exit codes: 0 ok, 2 usage error, 3 input format error, 4 schema error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitSchema = 4;

/// Entry point of the command line tool (dereverb, simulate,
/// analyze-coherence, sweep-bias, evaluate).
int cli_main(int argc, const char* const* argv);

}  // namespace cdr
