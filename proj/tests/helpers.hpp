#pragma once

#include "flowmig/fms/simulator.hpp"

namespace flowmig::test
{
    /// A 200-segment NAT transfer that migrates shortly after the handshake.
    inline fms::Scenario small_scenario(fms::Strategy s, std::uint64_t seed = 1, std::int64_t bytes = 200'000)
    {
        fms::Scenario sc = fms::default_scenario();
        sc.scenario_id = "small";
        sc.flow.total_bytes = bytes;
        sc.t1_s = 0.1;
        sc.strategy = s;
        sc.seed = seed;
        return sc;
    }

    inline std::size_t count_kind(const Trace &t, EventKind k)
    {
        std::size_t n = 0;
        for (const Event &e : t.events)
        {
            n += e.kind == k ? 1 : 0;
        }
        return n;
    }
} // namespace flowmig::test
