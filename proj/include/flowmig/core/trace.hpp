#pragma once

#include "flowmig/core/types.hpp"
#include "flowmig/nf/state.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowmig
{
    /// The complete, append-only event log of one simulation run.
    ///
    /// Events refer to packets, state snapshots and messages by id; ids are
    /// positions in the corresponding table. Output packets of NFProcess events
    /// are listed in output_ids[output_begin, output_begin + output_count).
    struct Trace
    {
        std::string scenario_id;
        std::uint64_t seed = 0;
        std::string strategy;
        nf::NfConfig nf;
        nf::NfSchema schema;

        std::vector<Event> events;
        std::vector<Packet> packets;
        std::vector<nf::NFState> states;
        std::vector<nf::StateUpdateMessage> messages;
        std::vector<std::int64_t> output_ids;

        const Packet &packet(std::int64_t id) const { return packets.at(static_cast<std::size_t>(id)); }
        const nf::NFState &state(std::int64_t id) const { return states.at(static_cast<std::size_t>(id)); }
        const nf::StateUpdateMessage &message(std::int64_t id) const { return messages.at(static_cast<std::size_t>(id)); }
        std::span<const std::int64_t> outputs_of(const Event &e) const
        {
            return std::span<const std::int64_t>(output_ids).subspan(static_cast<std::size_t>(e.output_begin),
                                                                    static_cast<std::size_t>(e.output_count));
        }
    };

    bool operator==(const Trace &a, const Trace &b);
} // namespace flowmig
