#pragma once

#include "flowmig/core/trace.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace flowmig
{
    /// Timestamp merge of two packet sequences (P1 ⊕ P2). Inputs may be in any order.
    /// Throws MalformedTraceError if an admit_ts occurs more than once.
    std::vector<Packet> merge_by_timestamp(const std::vector<Packet> &a, const std::vector<Packet> &b);

    enum class Projection : std::uint8_t
    {
        P,
        P1,
        P2,
        PstarDelta,
        Q1,
        Q2,
        Buffered,
        Dropped,
    };

    /// Event index range of the migration window; empty when no migration started.
    struct MigrationWindow
    {
        std::size_t start = 0;
        std::size_t end = 0;
        bool present = false;

        bool contains(std::size_t i) const noexcept { return present && i > start && i < end; }
    };

    MigrationWindow migration_window(const Trace &t);

    /// Throws MalformedTraceError on time regression, dangling ids or duplicate admissions.
    void validate_trace(const Trace &t);

    /// Packet-valued projections (P, P1, P2, P*_delta, buffered, dropped).
    /// P is in admission order, P1/P2 in NF processing order, P*_delta in exit order.
    std::vector<Packet> project_packets(const Trace &t, Projection which);

    /// State-valued projections (Q1, Q2): snapshots at the source / destination NF
    /// created between MigrationStart and MigrationEnd, in creation order.
    std::vector<nf::NFState> project_states(const Trace &t, Projection which);

    /// Source-NF state in force when migration started (initial state if the
    /// source never changed before that point).
    nf::NFState state_at_migration_start(const Trace &t);

    /// Count of events of one kind.
    std::size_t count_events(const Trace &t, EventKind kind);
} // namespace flowmig
