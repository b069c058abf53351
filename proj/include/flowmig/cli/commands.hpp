#pragma once

#include <iosfwd>

namespace flowmig::cli
{
    inline constexpr int kExitOk = 0;
    inline constexpr int kExitFailed = 1;
    inline constexpr int kExitConfig = 2;

    /// Subcommands run, sweep, check and report. Returns the process exit status.
    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
} // namespace flowmig::cli
