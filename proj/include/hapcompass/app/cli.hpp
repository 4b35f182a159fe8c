#pragma once

#include <iosfwd>

namespace hapcompass::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // bad flags, config or policy shape
inline constexpr int kExitRuntime = 3;  // anything else that went wrong while running

/// The `hapcompass` entry point. Subcommands: serve, experiment, replay, afc,
/// train, eval, export-csv. Never throws; returns an exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hapcompass::app
