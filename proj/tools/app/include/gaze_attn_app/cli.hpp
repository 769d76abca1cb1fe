#pragma once

namespace gaze_attn::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsageError = 2;

/// Parses arguments, runs one subcommand and maps failures to exit codes.
int run_cli(int argc, const char* const* argv);

}  // namespace gaze_attn::app
