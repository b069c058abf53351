#include "flowmig/checkers/checkers.hpp"

#include "flowmig/core/sequence.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <tuple>

namespace flowmig::checkers
{
    namespace
    {
        constexpr std::array<std::string_view, 8> kNames = {"L", "N", "O", "SO", "E", "EventualSync", "WeakO_R1",
                                                            "WeakO_R2"};

        using OutKey = std::tuple<Direction, std::int64_t, std::uint64_t>;

        OutKey key_of(const Packet &p)
        {
            return {p.direction, p.seq_id, header_digest(p)};
        }

        std::string describe(const Packet &p)
        {
            return std::string(to_string(p.kind)) + " " + std::string(to_string(p.direction)) + " seq_id " +
                   std::to_string(p.seq_id) + " (admit_ts " + std::to_string(p.admit_ts) + ")";
        }

        Verdict pass(Property prop, std::string why)
        {
            return Verdict{prop, true, {}, std::move(why)};
        }

        Verdict fail(Property prop, std::vector<std::size_t> events, std::string why)
        {
            return Verdict{prop, false, std::move(events), std::move(why)};
        }

        /// Event indices keyed by packet id for one event kind.
        std::map<std::int64_t, std::size_t> events_by_packet(const Trace &t, EventKind kind)
        {
            std::map<std::int64_t, std::size_t> m;
            for (std::size_t i = 0; i < t.events.size(); ++i)
            {
                if (t.events[i].kind == kind && t.events[i].packet != kNone)
                {
                    m.emplace(t.events[i].packet, i);
                }
            }
            return m;
        }

        std::vector<std::size_t> exit_events(const Trace &t)
        {
            std::vector<std::size_t> v;
            for (std::size_t i = 0; i < t.events.size(); ++i)
            {
                if (t.events[i].kind == EventKind::ExitFMS)
                {
                    v.push_back(i);
                }
            }
            return v;
        }

        IdealReplay ideal_of_admitted(const Trace &t)
        {
            return ideal_replay(t.nf, nf::initial_state(t.schema), project_packets(t, Projection::P));
        }

        /// States and packets seen at the two instances inside the migration window.
        struct WindowView
        {
            MigrationWindow window;
            nf::NFState q0;
            std::vector<std::size_t> q1_events;
            std::vector<std::size_t> q2_events;
            std::vector<Packet> src_packets;
            std::vector<Packet> dst_packets;
        };

        WindowView window_view(const Trace &t)
        {
            WindowView v;
            v.window = migration_window(t);
            v.q0 = state_at_migration_start(t);
            if (!v.window.present)
            {
                return v;
            }
            for (std::size_t i = v.window.start + 1; i < v.window.end; ++i)
            {
                const Event &e = t.events[i];
                if (e.kind == EventKind::NFProcess && e.site == Node::NfSrc)
                {
                    v.q1_events.push_back(i);
                    v.src_packets.push_back(t.packet(e.packet));
                }
                else if (e.kind == EventKind::NFProcess && e.site == Node::NfDst)
                {
                    v.q2_events.push_back(i);
                    v.dst_packets.push_back(t.packet(e.packet));
                }
                else if (e.kind == EventKind::MsgApply && e.site == Node::NfDst)
                {
                    v.q2_events.push_back(i);
                }
            }
            return v;
        }

        // Ideal input for the window: P1 then P2 in processing order, with each
        // direction's packets put back into admission order. Packets admitted at
        // different switches have no common observation point, so the slots the
        // two directions occupy are taken from the processing order.
        std::vector<Packet> window_input(const WindowView &v)
        {
            std::vector<Packet> seq = v.src_packets;
            seq.insert(seq.end(), v.dst_packets.begin(), v.dst_packets.end());
            for (Direction d : {Direction::Forward, Direction::Reverse})
            {
                std::vector<Packet> mine;
                std::vector<std::size_t> slots;
                for (std::size_t i = 0; i < seq.size(); ++i)
                {
                    if (seq[i].direction == d)
                    {
                        mine.push_back(seq[i]);
                        slots.push_back(i);
                    }
                }
                std::stable_sort(mine.begin(), mine.end(),
                                 [](const Packet &a, const Packet &b) { return a.admit_ts < b.admit_ts; });
                for (std::size_t k = 0; k < slots.size(); ++k)
                {
                    seq[slots[k]] = mine[k];
                }
            }
            return seq;
        }

        const nf::NFState &state_after(const Trace &t, std::size_t event)
        {
            return t.state(t.events[event].state_after);
        }

        std::size_t common_suffix(const Trace &t, const std::vector<std::size_t> &q2,
                                  const std::vector<nf::NFState> &ideal)
        {
            std::size_t n = 0;
            while (n < q2.size() && n < ideal.size() &&
                   nf::same_substates(state_after(t, q2[q2.size() - 1 - n]), ideal[ideal.size() - 1 - n]))
            {
                ++n;
            }
            return n;
        }

        /// Processing order at one instance must follow admission order per direction.
        std::optional<Verdict> subsequence_of_P(const Trace &t, Node site, const char *name)
        {
            std::map<Direction, std::pair<Timestamp, std::size_t>> last;
            for (std::size_t i = 0; i < t.events.size(); ++i)
            {
                const Event &e = t.events[i];
                if (e.kind != EventKind::NFProcess || e.site != site)
                {
                    continue;
                }
                const Packet &p = t.packet(e.packet);
                auto it = last.find(p.direction);
                if (it != last.end() && p.admit_ts <= it->second.first)
                {
                    return fail(Property::SO, {it->second.second, i},
                                std::string(name) + " is not a subsequence of P: " + describe(p) +
                                    " processed after admit_ts " + std::to_string(it->second.first));
                }
                last[p.direction] = {p.admit_ts, i};
            }
            return std::nullopt;
        }
    } // namespace

    std::string_view to_string(Property p) noexcept
    {
        return kNames[static_cast<std::size_t>(p)];
    }

    Property property_from(std::string_view s)
    {
        for (std::size_t i = 0; i < kNames.size(); ++i)
        {
            if (kNames[i] == s)
            {
                return static_cast<Property>(i);
            }
        }
        throw std::invalid_argument("unknown property '" + std::string(s) + "'");
    }

    Verdict check_L(const Trace &t)
    {
        const IdealReplay ideal = ideal_of_admitted(t);
        std::map<OutKey, std::vector<std::size_t>> expected;
        for (std::size_t k = 0; k < ideal.output_seq.size(); ++k)
        {
            expected[key_of(ideal.output_seq[k])].push_back(k);
        }
        for (std::size_t i : exit_events(t))
        {
            const Packet &p = t.packet(t.events[i].packet);
            auto it = expected.find(key_of(p));
            if (it == expected.end() || it->second.empty())
            {
                return fail(Property::L, {i}, "FMS output " + describe(p) + " is not an ideal output");
            }
            it->second.pop_back();
        }
        const auto drops = events_by_packet(t, EventKind::Drop);
        const auto admits = events_by_packet(t, EventKind::Admit);
        for (const auto &[key, left] : expected)
        {
            if (left.empty())
            {
                continue;
            }
            const Packet &out = ideal.output_seq[left.front()];
            const Packet &in = ideal.input[ideal.produced_by[left.front()]];
            std::vector<std::size_t> ev;
            if (auto d = drops.find(in.id); d != drops.end())
            {
                ev.push_back(d->second);
            }
            else if (auto a = admits.find(in.id); a != admits.end())
            {
                ev.push_back(a->second);
            }
            const bool dropped = drops.contains(in.id);
            return fail(Property::L, ev,
                        "ideal output " + describe(out) + " never left the FMS" +
                            (dropped ? " (input dropped by the AM)" : ""));
        }
        return pass(Property::L, "FMS output set equals the ideal output set");
    }

    Verdict check_N(const Trace &t)
    {
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            if (t.events[i].kind == EventKind::Buffer)
            {
                return fail(Property::N, {i},
                            "packet " + describe(t.packet(t.events[i].packet)) + " buffered by the AM");
            }
        }
        return pass(Property::N, "no Buffer events");
    }

    Verdict check_E(const Trace &t)
    {
        const IdealReplay ideal = ideal_of_admitted(t);
        std::map<OutKey, std::vector<std::size_t>> position;
        for (std::size_t k = 0; k < ideal.output_seq.size(); ++k)
        {
            position[key_of(ideal.output_seq[k])].push_back(k);
        }
        struct Last
        {
            std::size_t pos;
            std::size_t event;
        };
        std::map<Direction, std::vector<Last>> matched;
        for (std::size_t i : exit_events(t))
        {
            const Packet &p = t.packet(t.events[i].packet);
            auto it = position.find(key_of(p));
            if (it == position.end())
            {
                return fail(Property::E, {i}, "FMS output " + describe(p) + " is not an ideal output");
            }
            std::vector<Last> &seen = matched[p.direction];
            const std::size_t floor = seen.empty() ? 0 : seen.back().pos + 1;
            auto pos = std::find_if(it->second.begin(), it->second.end(), [&](std::size_t k) { return k >= floor; });
            if (pos == it->second.end())
            {
                // Find the earlier exit that overtook this one.
                const std::size_t mine = it->second.front();
                auto over = std::find_if(seen.begin(), seen.end(), [&](const Last &l) { return l.pos > mine; });
                std::vector<std::size_t> ev;
                if (over != seen.end())
                {
                    ev.push_back(over->event);
                }
                ev.push_back(i);
                std::string who = over != seen.end() ? describe(t.packet(t.events[over->event].packet)) : "an earlier packet";
                return fail(Property::E, ev, who + " left the FMS before " + describe(p) + ", against ideal order");
            }
            seen.push_back(Last{*pos, i});
        }
        return pass(Property::E, "exit order is a subsequence of the ideal output in each direction");
    }

    Verdict check_O(const Trace &t)
    {
        const WindowView v = window_view(t);
        if (!v.window.present)
        {
            return pass(Property::O, "no migration; Q1 and Q2 empty");
        }
        const IdealReplay ideal = ideal_replay(t.nf, v.q0, window_input(v));
        const auto &seq = ideal.state_seq;
        for (std::size_t k = 0; k < v.q1_events.size(); ++k)
        {
            if (k + 1 >= seq.size() || !nf::same_substates(state_after(t, v.q1_events[k]), seq[k + 1]))
            {
                return fail(Property::O, {v.q1_events[k]},
                            "Q1 is not a prefix of the ideal state sequence: source state " + std::to_string(k + 1) +
                                " differs from the ideal");
            }
        }
        const std::size_t common = common_suffix(t, v.q2_events, seq);
        if (common < v.q2_events.size())
        {
            const std::size_t bad = v.q2_events[v.q2_events.size() - 1 - common];
            return fail(Property::O, {bad},
                        "Q2 is not a suffix of the ideal state sequence: only the last " + std::to_string(common) +
                            " of " + std::to_string(v.q2_events.size()) + " destination states match");
        }
        return pass(Property::O, "Q1 is a prefix and Q2 a suffix of the ideal state sequence");
    }

    Verdict check_SO(const Trace &t)
    {
        Verdict o = check_O(t);
        if (!o.pass)
        {
            o.property = Property::SO;
            o.explanation = "O fails: " + o.explanation;
            return o;
        }
        if (auto v = subsequence_of_P(t, Node::NfSrc, "P1"))
        {
            return *v;
        }
        if (auto v = subsequence_of_P(t, Node::NfDst, "P2"))
        {
            return *v;
        }
        return pass(Property::SO, "O holds and P1, P2 are subsequences of P");
    }

    Verdict check_eventual_sync(const Trace &t)
    {
        const WindowView v = window_view(t);
        if (v.q2_events.empty())
        {
            return pass(Property::EventualSync, "Q2 is empty");
        }
        const IdealReplay ideal = ideal_replay(t.nf, v.q0, window_input(v));
        const std::size_t common = common_suffix(t, v.q2_events, ideal.state_seq);
        if (common == 0)
        {
            return fail(Property::EventualSync, {v.q2_events.back()},
                        "last destination state differs from the final ideal state");
        }
        return pass(Property::EventualSync,
                    "longest common suffix of Q2 and the ideal state sequence: " + std::to_string(common));
    }

    WeakOVerdict check_weak_o(const Trace &t)
    {
        WeakOVerdict out;
        out.r2 = check_eventual_sync(t);
        out.r2.property = Property::WeakO_R2;

        const MigrationWindow w = migration_window(t);
        if (!w.present)
        {
            out.r1 = pass(Property::WeakO_R1, "no migration");
            return out;
        }

        struct Obligation
        {
            int index;
            nf::SubstateValue value;
            Timestamp ts;
            std::optional<std::size_t> origin;
        };
        std::vector<Obligation> obligations;
        const nf::NFState q0 = state_at_migration_start(t);
        const nf::NFState init = nf::initial_state(t.schema);
        for (int idx : t.schema.css_indices)
        {
            if (q0.at(idx) != init.at(idx))
            {
                obligations.push_back({idx, q0.at(idx), q0.substates[static_cast<std::size_t>(idx - 1)].ts, {}});
            }
        }
        for (std::size_t i = w.start + 1; i < w.end; ++i)
        {
            const Event &e = t.events[i];
            if (e.kind != EventKind::NFProcess || e.site != Node::NfSrc)
            {
                continue;
            }
            const nf::NFState &before = t.state(e.state_before);
            const nf::NFState &after = t.state(e.state_after);
            for (int idx : t.schema.css_indices)
            {
                if (before.at(idx) != after.at(idx))
                {
                    obligations.push_back({idx, after.at(idx), t.packet(e.packet).admit_ts, i});
                }
            }
        }

        for (const Obligation &ob : obligations)
        {
            std::optional<std::size_t> applied;
            for (std::size_t i = w.start + 1; i < t.events.size() && !applied; ++i)
            {
                const Event &e = t.events[i];
                if (e.kind == EventKind::MsgApply && e.site == Node::NfDst && state_after(t, i).at(ob.index) == ob.value)
                {
                    applied = i;
                }
            }
            for (std::size_t i = w.start + 1; i < t.events.size(); ++i)
            {
                if (applied && i >= *applied)
                {
                    break;
                }
                const Event &e = t.events[i];
                if (e.kind != EventKind::NFProcess || e.site != Node::NfDst)
                {
                    continue;
                }
                const Packet &p = t.packet(e.packet);
                if (p.admit_ts > ob.ts)
                {
                    std::vector<std::size_t> ev{i};
                    if (ob.origin)
                    {
                        ev.push_back(*ob.origin);
                    }
                    const std::string when =
                        applied ? "before its MsgApply at event " + std::to_string(*applied) : "and it is never applied";
                    out.r1 = fail(Property::WeakO_R1, ev,
                                  "premature destination NFProcess at event " + std::to_string(i) + " of " +
                                      describe(p) + ": CSS substate " + t.schema.substates[static_cast<std::size_t>(ob.index - 1)].name +
                                      " (source_ts " + std::to_string(ob.ts) + ") not yet synchronized, " + when);
                    return out;
                }
            }
        }
        out.r1 = pass(Property::WeakO_R1, std::to_string(obligations.size()) +
                                              " CSS values applied before any later destination processing");
        return out;
    }

    std::vector<Verdict> check_all(const Trace &t)
    {
        WeakOVerdict w = check_weak_o(t);
        Verdict sync = w.r2;
        sync.property = Property::EventualSync;
        return {check_L(t), check_N(t), check_O(t), check_SO(t), check_E(t), std::move(w.r1), std::move(w.r2),
                std::move(sync)};
    }
} // namespace flowmig::checkers
