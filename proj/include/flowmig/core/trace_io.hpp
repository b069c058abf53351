#pragma once

#include "flowmig/core/trace.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace flowmig
{
    // JSON lines: one header record, then one record per event. Packets,
    // states and messages are defined inline ("defs") on the first line that
    // can reference them, so a reader never needs a second pass.

    void write_trace(std::ostream &os, const Trace &t);
    std::string trace_to_string(const Trace &t);
    void save_trace(const std::filesystem::path &path, const Trace &t);

    /// Throws MalformedTraceError with the offending line number.
    Trace read_trace(std::istream &is);
    Trace trace_from_string(const std::string &text);
    Trace load_trace(const std::filesystem::path &path);
} // namespace flowmig
