#include "flowmig/core/trace_io.hpp"
#include "flowmig/fms/feasibility.hpp"
#include "flowmig/nf/nf.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <map>

using namespace flowmig;
using namespace flowmig::fms;
using test::count_kind;

namespace
{
    const RunResult &default_run(Strategy s)
    {
        static std::map<Strategy, RunResult> cache;
        auto it = cache.find(s);
        if (it == cache.end())
        {
            Scenario sc = default_scenario();
            sc.strategy = s;
            it = cache.emplace(s, run_simulation(sc)).first;
        }
        return it->second;
    }

    std::size_t index_of(const Trace &t, EventKind k)
    {
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            if (t.events[i].kind == k)
            {
                return i;
            }
        }
        return t.events.size();
    }

    std::size_t count_route(const Trace &t, Route r, std::size_t from = 0)
    {
        std::size_t n = 0;
        for (std::size_t i = from; i < t.events.size(); ++i)
        {
            const Event &e = t.events[i];
            n += e.kind == EventKind::RouteDecision && e.route == r ? 1 : 0;
        }
        return n;
    }

    std::size_t first_dst_process(const Trace &t)
    {
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            if (t.events[i].kind == EventKind::NFProcess && t.events[i].site == Node::NfDst)
            {
                return i;
            }
        }
        return t.events.size();
    }

    std::string config_field(const std::string &json)
    {
        try
        {
            validate(scenario_from_json_text(json));
        }
        catch (const ConfigError &e)
        {
            return e.field();
        }
        return "";
    }
} // namespace

TEST_CASE("NoMigration with default parameters stays on the old path")
{
    const Trace &t = default_run(Strategy::NoMigration).trace;
    CHECK(default_run(Strategy::NoMigration).stats.completed);
    CHECK(count_kind(t, EventKind::Buffer) == 0);
    CHECK(count_kind(t, EventKind::Drop) == 0);
    CHECK(count_kind(t, EventKind::Reroute) == 0);
    CHECK(count_route(t, Route::Dst) == 0);
    CHECK(first_dst_process(t) == t.events.size());
}

TEST_CASE("WeakO with default parameters neither buffers nor drops")
{
    const RunResult &r = default_run(Strategy::WeakO);
    const Trace &t = r.trace;
    CHECK(r.stats.completed);
    CHECK(count_kind(t, EventKind::Buffer) == 0);
    CHECK(count_kind(t, EventKind::Drop) == 0);
    CHECK(count_kind(t, EventKind::Reroute) == 1);
    CHECK(count_kind(t, EventKind::MigrationStart) == 1);
    CHECK(count_kind(t, EventKind::MigrationEnd) == 1);
    const std::size_t start = index_of(t, EventKind::MigrationStart);
    REQUIRE(start < t.events.size());
    CHECK(t.events[start].time == ticks_from_s(default_scenario().t1_s));
}

TEST_CASE("BufferAll with default parameters buffers packets")
{
    const RunResult &r = default_run(Strategy::BufferAll);
    CHECK(r.stats.completed);
    CHECK(count_kind(r.trace, EventKind::Buffer) > 0);
    CHECK(r.stats.buffered == static_cast<std::int64_t>(count_kind(r.trace, EventKind::Buffer)));
    CHECK(count_kind(r.trace, EventKind::Reroute) == 1);
    CHECK(count_kind(r.trace, EventKind::MigrationEnd) == 1);
}

TEST_CASE("FreezeDrop drops packets admitted during the copy")
{
    const RunResult r = run_simulation(test::small_scenario(Strategy::FreezeDrop));
    CHECK(count_kind(r.trace, EventKind::Drop) > 0);
    const std::size_t start = index_of(r.trace, EventKind::MigrationStart);
    const std::size_t flip = index_of(r.trace, EventKind::Reroute);
    for (std::size_t i = 0; i < r.trace.events.size(); ++i)
    {
        if (r.trace.events[i].kind == EventKind::Drop)
        {
            CHECK(i > start);
            CHECK(i < flip);
        }
    }
}

TEST_CASE("Action Manager: routes to the source before the flip and to the destination after")
{
    for (std::uint64_t seed : {1, 2, 3})
    {
        const Trace t = run_simulation(test::small_scenario(Strategy::WeakO, seed)).trace;
        const std::size_t flip = index_of(t, EventKind::Reroute);
        REQUIRE(flip < t.events.size());
        CHECK(count_route(t, Route::Src, flip) == 0);
        CHECK(count_route(t, Route::Dst) == count_route(t, Route::Dst, flip));
        // Every admission is followed by exactly one routing action.
        std::map<std::int64_t, int> actions;
        for (const Event &e : t.events)
        {
            if (e.kind == EventKind::RouteDecision || e.kind == EventKind::Buffer || e.kind == EventKind::Drop)
            {
                ++actions[e.packet];
            }
        }
        for (const Event &e : t.events)
        {
            if (e.kind == EventKind::Admit)
            {
                CHECK(actions[e.packet] == 1);
            }
        }
    }
}

TEST_CASE("Re-route: in-flight source packets still finish at the source, and no more than were in flight")
{
    const RunResult &r = default_run(Strategy::WeakO);
    const Trace &t = r.trace;
    const std::size_t flip = index_of(t, EventKind::Reroute);
    REQUIRE(flip < t.events.size());
    std::int64_t late = 0;
    for (std::size_t i = flip; i < t.events.size(); ++i)
    {
        late += t.events[i].kind == EventKind::NFProcess && t.events[i].site == Node::NfSrc ? 1 : 0;
    }
    CHECK(late > 0);
    CHECK(late <= t.events[flip].aux);
    CHECK(t.events[flip].aux == r.stats.in_flight_at_reroute);
}

TEST_CASE("SMM: CSS is applied and acknowledged before the flip, later deltas are still sent")
{
    const Trace &t = default_run(Strategy::WeakO).trace;
    const std::size_t flip = index_of(t, EventKind::Reroute);
    const std::size_t end = index_of(t, EventKind::MigrationEnd);
    REQUIRE(flip < end);
    std::size_t css_apply = t.events.size();
    std::size_t other_after_flip = 0;
    for (std::size_t i = 0; i < t.events.size(); ++i)
    {
        const Event &e = t.events[i];
        if (e.kind == EventKind::MsgApply && t.message(e.message).cls == nf::MessageClass::CSS)
        {
            css_apply = std::min(css_apply, i);
        }
        if (e.kind == EventKind::MsgSend && i > flip && t.message(e.message).cls != nf::MessageClass::CSS)
        {
            ++other_after_flip;
            CHECK(i < end);
        }
    }
    CHECK(css_apply < flip);
    CHECK(other_after_flip > 0);
    // The timer runs for at least T_r before the migration can end.
    CHECK(t.events[end].time - t.events[flip].time >= effective_t_r(default_scenario()));
}

TEST_CASE("message channel: exactly once, in order, and gated by the flip")
{
    Scenario sc = test::small_scenario(Strategy::WeakO, 2);
    sc.message_delay_ms = 150;
    const Trace t = run_simulation(sc).trace;
    std::vector<std::int64_t> sent, applied;
    for (const Event &e : t.events)
    {
        if (e.kind == EventKind::MsgSend)
        {
            sent.push_back(e.message);
        }
        if (e.kind == EventKind::MsgApply)
        {
            applied.push_back(e.message);
        }
    }
    CHECK(!sent.empty());
    CHECK(sent == applied);
    const std::size_t dst = first_dst_process(t);
    for (std::size_t i = dst; i < t.events.size(); ++i)
    {
        const Event &e = t.events[i];
        if (e.kind == EventKind::MsgApply)
        {
            CHECK(t.message(e.message).cls != nf::MessageClass::CSS);
        }
    }
}

TEST_CASE("no message, no message events")
{
    // Counter has no CSS and the migration is over before any data reaches the NF.
    Scenario sc = test::small_scenario(Strategy::WeakO);
    sc.nf.kind = nf::NfKind::Counter;
    sc.t1_s = 0;
    const Trace t = run_simulation(sc).trace;
    CHECK(count_kind(t, EventKind::MsgSend) == count_kind(t, EventKind::MsgApply));
    for (const Event &e : t.events)
    {
        if (e.kind == EventKind::MsgSend)
        {
            CHECK_FALSE(t.message(e.message).deltas.empty());
        }
    }
}

TEST_CASE("BufferAll overflows a 10-packet buffer")
{
    Scenario sc = default_scenario();
    sc.strategy = Strategy::BufferAll;
    sc.buffer_cap = 10;
    // Oracle: one packet every S*8/B seconds on the access link, held for at
    // least one message round trip.
    const double per_packet_s = 1000.0 * 8 / sc.link(Node::H1, Node::S1).bandwidth_bps;
    const double hold_s = 2 * seconds_from_ticks(message_delay(sc));
    REQUIRE(hold_s / per_packet_s > 10);
    CHECK_THROWS_AS(run_simulation(sc), BufferOverflow);
}

TEST_CASE("scenario errors name the offending field")
{
    CHECK(config_field(R"({"topology":{"links":[{"from":"s1","to":"nf_src","bandwidth_bps":1e7,"delay_ms":-1}]}})") ==
          "topology.links[0].delay_ms");
    CHECK(config_field(R"({"topology":{"links":[{"from":"s1","to":"nf_src","bandwidth_bps":0,"delay_ms":1}]}})") ==
          "topology.links[0].bandwidth_bps");
    CHECK(config_field(R"({"topology":{"links":[{"from":"h1","to":"h2","bandwidth_bps":1,"delay_ms":1}]}})") ==
          "topology.links[0]");
    CHECK(config_field(R"({"flow":{"total_bytes":1000,"colour":1}})") == "flow.colour");
    CHECK(config_field(R"({"flow":{"total_bytes":0}})") == "flow.total_bytes");
    CHECK(config_field(R"({"strategy":"Teleport"})") == "strategy");
    CHECK(config_field(R"({"t1_s":100000})") == "t1_s");
    CHECK(config_field(R"({"t_r_ticks":1})") == "t_r_ticks");
    CHECK(config_field(R"({"seed":"x"})") == "seed");
    CHECK(config_field("[1,2]") == "(file)");
    CHECK(config_field(R"({"strategy":"NoMigration","t1_s":100000})") == "");
    Scenario sc = default_scenario();
    sc.link(Node::S1, Node::NfSrc).delay_ms = -3;
    CHECK_THROWS_AS(run_simulation(sc), ConfigError);
}

TEST_CASE("scenario JSON round-trips")
{
    Scenario sc = test::small_scenario(Strategy::BufferAll, 9);
    add_path_delay(sc, false, 12.5);
    sc.nf.kind = nf::NfKind::Dpi;
    sc.flow.arrival = Arrival::Poisson;
    CHECK(scenario_from_json_text(scenario_to_json_text(sc)) == sc);
}

TEST_CASE("the default re-route timer covers the worst-case flip latency")
{
    const Scenario sc = default_scenario();
    CHECK(default_t_r(sc) >= flip_latency_bound(sc));
    // Oracle: 2 x (4 hops of 10 ms + one serialization of 1000 bytes at 10 Mbit/s).
    CHECK(default_t_r(sc) == 2 * (4 * 10'000 + 800));
    CHECK(serialization_ticks(1000, 10e6) == 800);
}

TEST_CASE("feasibility")
{
    SUBCASE("NAT with t1 well after the handshake is feasible")
    {
        const FeasibilityReport r = validate_feasibility(default_scenario(), nf::nat_schema());
        CHECK(r.feasible);
        CHECK(r.nsp_start_delay == 0);
    }
    SUBCASE("T_m + T_r not below the NSP length is infeasible")
    {
        CHECK_FALSE(assess_feasibility(600, 500, 0, 1000, 10).feasible);
        CHECK_FALSE(assess_feasibility(500, 500, 0, 1000, 10).feasible);
        CHECK(assess_feasibility(499, 500, 0, 1000, 10).feasible);
        CHECK_FALSE(assess_feasibility(1, 1, 20, 1000, 10).feasible);
    }
    SUBCASE("an NF without CSS is always feasible")
    {
        Scenario sc = default_scenario();
        sc.t1_s = 0;
        const FeasibilityReport r = validate_feasibility(sc, nf::dpi_schema(), 0);
        CHECK(r.feasible);
        CHECK(r.nsp_duration == kUnbounded);
    }
}

TEST_CASE("WeakO invariants over seeds and NFs")
{
    for (nf::NfKind kind : {nf::NfKind::Nat, nf::NfKind::Counter, nf::NfKind::Dpi})
    {
        for (std::uint64_t seed = 1; seed <= 4; ++seed)
        {
            Scenario sc = test::small_scenario(Strategy::WeakO, seed);
            sc.nf.kind = kind;
            sc.t1_s = 0.02 * static_cast<double>(seed - 1);
            const Trace t = run_simulation(sc).trace;
            CHECK(count_kind(t, EventKind::Buffer) == 0);
            CHECK(count_kind(t, EventKind::Drop) == 0);
            CHECK(count_kind(t, EventKind::Reroute) == 1);
            const std::size_t flip = index_of(t, EventKind::Reroute);
            CHECK(count_route(t, Route::Src, flip) == 0);
            const std::size_t dst = first_dst_process(t);
            for (std::size_t i = dst; i < t.events.size(); ++i)
            {
                const Event &e = t.events[i];
                if (e.kind == EventKind::MsgApply)
                {
                    CHECK(t.message(e.message).cls != nf::MessageClass::CSS);
                }
            }
        }
    }
}

TEST_CASE("BufferAll: destination processing starts after the last source exit")
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
    {
        const Trace t = run_simulation(test::small_scenario(Strategy::BufferAll, seed)).trace;
        const std::size_t dst = first_dst_process(t);
        REQUIRE(dst < t.events.size());
        for (std::size_t i = dst; i < t.events.size(); ++i)
        {
            if (t.events[i].kind == EventKind::ExitFMS)
            {
                const std::int64_t p = t.events[i].packet;
                // Exits after dst began must come from packets the destination produced.
                bool from_src = false;
                for (std::size_t j = 0; j < dst; ++j)
                {
                    const Event &e = t.events[j];
                    if (e.kind != EventKind::NFProcess || e.site != Node::NfSrc)
                    {
                        continue;
                    }
                    for (std::int64_t o : t.outputs_of(e))
                    {
                        from_src = from_src || o == p;
                    }
                }
                CHECK_FALSE(from_src);
            }
        }
    }
}

TEST_CASE("links and NF queues are FIFO")
{
    const Trace t = run_simulation(test::small_scenario(Strategy::WeakO, 5)).trace;
    // Per (ingress site, route) the NF sees packets in routing order.
    std::map<std::pair<Node, Route>, std::vector<std::int64_t>> routed;
    std::map<std::pair<Node, Node>, std::vector<std::int64_t>> processed;
    std::map<std::int64_t, Node> ingress;
    for (const Event &e : t.events)
    {
        if (e.kind == EventKind::RouteDecision)
        {
            routed[{e.site, e.route}].push_back(e.packet);
            ingress[e.packet] = e.site;
        }
        if (e.kind == EventKind::NFProcess)
        {
            processed[{ingress.at(e.packet), e.site}].push_back(e.packet);
        }
    }
    for (const auto &[key, order] : routed)
    {
        const Node nf = key.second == Route::Src ? Node::NfSrc : Node::NfDst;
        CHECK(processed[{key.first, nf}] == order);
    }
}

TEST_CASE("identical scenario and seed give identical trace bytes")
{
    const Scenario sc = test::small_scenario(Strategy::WeakO, 6);
    CHECK(trace_to_string(run_simulation(sc).trace) == trace_to_string(run_simulation(sc).trace));
    const Scenario other = test::small_scenario(Strategy::WeakO, 7);
    CHECK(trace_to_string(run_simulation(sc).trace) != trace_to_string(run_simulation(other).trace));
}
