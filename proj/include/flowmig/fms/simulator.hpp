#pragma once

#include "flowmig/core/trace.hpp"
#include "flowmig/fms/scenario.hpp"

#include <stdexcept>

namespace flowmig::fms
{
    /// A CSS delta was produced at the source after the flow was re-routed.
    class ProtocolViolation : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class BufferOverflow : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class SimulationError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Test-only faults.
    struct FaultInjection
    {
        // Index among RCSS/NSS messages whose MsgApply is skipped (it is still acknowledged).
        std::int64_t suppress_other_message = -1;
    };

    struct RunStats
    {
        bool completed = false;
        Tick finish_time = 0;
        Tick migration_start = -1;
        Tick reroute_at = -1;
        Tick migration_end = -1;
        std::int64_t in_flight_at_reroute = 0;
        std::int64_t post_flip_source_steps = 0;
        // Source steps after MigrationEnd; their deltas never reach the destination.
        std::int64_t late_source_steps = 0;
        std::int64_t buffered = 0;
        std::int64_t dropped = 0;
        std::int64_t max_buffer = 0;

        std::int64_t dup_acks = 0;
        std::int64_t retransmits = 0;
        std::int64_t spurious_retransmits = 0;
        std::int64_t dsacks = 0;
        std::int64_t rto_count = 0;
        std::int64_t max_reorder_extent = 0;
        int final_dupthresh = 3;
    };

    struct RunResult
    {
        Trace trace;
        RunStats stats;
    };

    /// One deterministic run. Throws ConfigError, ProtocolViolation, BufferOverflow,
    /// nf::ConflictError or SimulationError.
    RunResult run_simulation(const Scenario &sc, const FaultInjection &faults = {});
} // namespace flowmig::fms
