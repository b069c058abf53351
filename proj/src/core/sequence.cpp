#include "flowmig/core/sequence.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

namespace flowmig
{
    std::vector<Packet> merge_by_timestamp(const std::vector<Packet> &a, const std::vector<Packet> &b)
    {
        std::vector<Packet> out;
        out.reserve(a.size() + b.size());
        out.insert(out.end(), a.begin(), a.end());
        out.insert(out.end(), b.begin(), b.end());
        std::sort(out.begin(), out.end(), [](const Packet &x, const Packet &y) { return x.admit_ts < y.admit_ts; });
        auto dup = std::adjacent_find(out.begin(), out.end(),
                                      [](const Packet &x, const Packet &y) { return x.admit_ts == y.admit_ts; });
        if (dup != out.end())
        {
            throw MalformedTraceError("duplicate admit_ts " + std::to_string(dup->admit_ts) + " in merge");
        }
        return out;
    }

    MigrationWindow migration_window(const Trace &t)
    {
        MigrationWindow w;
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            if (t.events[i].kind == EventKind::MigrationStart && !w.present)
            {
                w.present = true;
                w.start = i;
                w.end = t.events.size();
            }
            else if (t.events[i].kind == EventKind::MigrationEnd && w.present)
            {
                w.end = i;
                break;
            }
        }
        return w;
    }

    void validate_trace(const Trace &t)
    {
        auto check_id = [](std::int64_t id, std::size_t n, const char *what, std::size_t at) {
            if (id != kNone && (id < 0 || static_cast<std::size_t>(id) >= n))
            {
                throw MalformedTraceError("event " + std::to_string(at) + ": dangling " + what + " id " +
                                          std::to_string(id));
            }
        };

        Tick last = 0;
        std::unordered_set<Timestamp> admitted;
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            const Event &e = t.events[i];
            if (e.time < last)
            {
                throw MalformedTraceError("event " + std::to_string(i) + ": time regression " +
                                          std::to_string(last) + " -> " + std::to_string(e.time));
            }
            last = e.time;
            check_id(e.packet, t.packets.size(), "packet", i);
            check_id(e.message, t.messages.size(), "message", i);
            check_id(e.state_before, t.states.size(), "state", i);
            check_id(e.state_after, t.states.size(), "state", i);
            if (e.output_count < 0 || e.output_begin < 0 ||
                static_cast<std::size_t>(e.output_begin + e.output_count) > t.output_ids.size())
            {
                throw MalformedTraceError("event " + std::to_string(i) + ": output range out of bounds");
            }
            if (e.kind == EventKind::Admit)
            {
                if (e.packet == kNone)
                {
                    throw MalformedTraceError("event " + std::to_string(i) + ": Admit without packet");
                }
                const Timestamp ts = t.packet(e.packet).admit_ts;
                if (ts == kNoTimestamp || !admitted.insert(ts).second)
                {
                    throw MalformedTraceError("event " + std::to_string(i) + ": admit_ts " + std::to_string(ts) +
                                              " missing or reused");
                }
            }
            if (e.kind == EventKind::NFProcess && (e.state_before == kNone || e.state_after == kNone))
            {
                throw MalformedTraceError("event " + std::to_string(i) + ": NFProcess without state snapshots");
            }
        }
        for (std::int64_t id : t.output_ids)
        {
            if (id < 0 || static_cast<std::size_t>(id) >= t.packets.size())
            {
                throw MalformedTraceError("dangling output packet id " + std::to_string(id));
            }
        }
    }

    namespace
    {
        void collect_kind(const Trace &t, EventKind kind, std::vector<Packet> &out)
        {
            for (const Event &e : t.events)
            {
                if (e.kind == kind)
                {
                    out.push_back(t.packet(e.packet));
                }
            }
        }

        void collect_nf(const Trace &t, Node site, std::vector<Packet> &out)
        {
            for (const Event &e : t.events)
            {
                if (e.kind == EventKind::NFProcess && e.site == site)
                {
                    out.push_back(t.packet(e.packet));
                }
            }
        }
    } // namespace

    std::vector<Packet> project_packets(const Trace &t, Projection which)
    {
        validate_trace(t);
        std::vector<Packet> out;
        switch (which)
        {
        case Projection::P:
            collect_kind(t, EventKind::Admit, out);
            break;
        case Projection::P1:
            collect_nf(t, Node::NfSrc, out);
            break;
        case Projection::P2:
            collect_nf(t, Node::NfDst, out);
            break;
        case Projection::PstarDelta:
            collect_kind(t, EventKind::ExitFMS, out);
            break;
        case Projection::Buffered:
            collect_kind(t, EventKind::Buffer, out);
            break;
        case Projection::Dropped:
            collect_kind(t, EventKind::Drop, out);
            break;
        case Projection::Q1:
        case Projection::Q2:
            throw std::invalid_argument("Q1/Q2 are state projections");
        }
        return out;
    }

    std::vector<nf::NFState> project_states(const Trace &t, Projection which)
    {
        validate_trace(t);
        if (which != Projection::Q1 && which != Projection::Q2)
        {
            throw std::invalid_argument("not a state projection");
        }
        const Node site = which == Projection::Q1 ? Node::NfSrc : Node::NfDst;
        const MigrationWindow w = migration_window(t);
        std::vector<nf::NFState> out;
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            const Event &e = t.events[i];
            if (!w.contains(i) || e.site != site)
            {
                continue;
            }
            if (e.kind == EventKind::NFProcess || e.kind == EventKind::MsgApply)
            {
                out.push_back(t.state(e.state_after));
            }
        }
        return out;
    }

    nf::NFState state_at_migration_start(const Trace &t)
    {
        const MigrationWindow w = migration_window(t);
        const std::size_t stop = w.present ? w.start : t.events.size();
        nf::NFState q = nf::initial_state(t.schema);
        for (std::size_t i = 0; i < stop; ++i)
        {
            const Event &e = t.events[i];
            if (e.site == Node::NfSrc && e.state_after != kNone &&
                (e.kind == EventKind::NFProcess || e.kind == EventKind::MsgApply))
            {
                q = t.state(e.state_after);
            }
        }
        return q;
    }

    std::size_t count_events(const Trace &t, EventKind kind)
    {
        return static_cast<std::size_t>(
            std::count_if(t.events.begin(), t.events.end(), [kind](const Event &e) { return e.kind == kind; }));
    }
} // namespace flowmig
