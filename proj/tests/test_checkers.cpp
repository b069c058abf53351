#include "flowmig/checkers/checkers.hpp"
#include "flowmig/core/sequence.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <map>

using namespace flowmig;
using namespace flowmig::checkers;
using fms::Strategy;

namespace
{
    const FlowKey kFwd{0x0A000001, 0xC6336402, 5000, 80, 6};

    Packet fwd(PacketKind k, Timestamp ts, std::int64_t seg = 0)
    {
        Packet p;
        p.id = ts;
        p.flow = kFwd;
        p.seq_id = ts;
        p.admit_ts = ts;
        p.kind = k;
        p.payload_len = k == PacketKind::Data ? 1000 : 0;
        p.tcp.segment = seg;
        return p;
    }

    nf::NfConfig nf_of(nf::NfKind k)
    {
        nf::NfConfig c;
        c.kind = k;
        return c;
    }

    const fms::RunResult &small(Strategy s)
    {
        static std::map<Strategy, fms::RunResult> cache;
        auto it = cache.find(s);
        if (it == cache.end())
        {
            it = cache.emplace(s, fms::run_simulation(test::small_scenario(s))).first;
        }
        return it->second;
    }

    // Steady-state transfer whose old path is 30 ms slower per link than the new one.
    const fms::RunResult &slow_old_path()
    {
        static const fms::RunResult r = [] {
            fms::Scenario sc = fms::default_scenario();
            fms::add_path_delay(sc, true, 30);
            return fms::run_simulation(sc);
        }();
        return r;
    }

    fms::RunResult adversarial(Strategy s, std::uint64_t seed)
    {
        fms::Scenario sc = test::small_scenario(s, seed);
        sc.message_delay_ms = 150;
        if (s == Strategy::AdversarialMidCsp)
        {
            sc.t1_s = 0;
        }
        return fms::run_simulation(sc);
    }

    void check_verdict_shape(const Verdict &v)
    {
        if (!v.pass)
        {
            CHECK_FALSE(v.counterexample.empty());
        }
        CHECK_FALSE(v.explanation.empty());
    }
} // namespace

TEST_CASE("ideal replay of an empty input")
{
    const IdealReplay r = ideal_replay(nf_of(nf::NfKind::Nat), {});
    CHECK(r.state_seq.size() == 1);
    CHECK(r.output_seq.empty());
    CHECK(nf::same_substates(r.state_seq[0], nf::initial_state(nf::nat_schema())));
}

TEST_CASE("ideal replay of a NAT SYN then DATA")
{
    const IdealReplay r = ideal_replay(nf_of(nf::NfKind::Nat), {fwd(PacketKind::Syn, 1), fwd(PacketKind::Data, 2, 1)});
    REQUIRE(r.state_seq.size() == 3);
    CHECK(r.state_seq[1].scalar(4) == 20000);
    CHECK(r.state_seq[1].scalar(5) == 1);
    CHECK(r.state_seq[2].scalar(4) == 20000);
    CHECK(r.state_seq[2].scalar(5) == 2);
    REQUIRE(r.output_seq.size() == 2);
    CHECK(r.produced_by == std::vector<std::size_t>{0, 1});
}

TEST_CASE("ideal replay of a NoMigration trace reproduces its output in each direction")
{
    const Trace &t = small(Strategy::NoMigration).trace;
    const IdealReplay r = ideal_replay(t.nf, project_packets(t, Projection::P));
    const auto exits = project_packets(t, Projection::PstarDelta);
    for (Direction d : {Direction::Forward, Direction::Reverse})
    {
        std::vector<Packet> a, b;
        for (const Packet &p : exits)
        {
            if (p.direction == d)
            {
                a.push_back(p);
            }
        }
        for (const Packet &p : r.output_seq)
        {
            if (p.direction == d)
            {
                b.push_back(p);
            }
        }
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(same_header(a[i], b[i]));
        }
    }
}

TEST_CASE("L verdicts")
{
    CHECK(check_L(small(Strategy::WeakO).trace).pass);
    CHECK(check_L(small(Strategy::NoMigration).trace).pass);
    const Trace &fd = small(Strategy::FreezeDrop).trace;
    const Verdict v = check_L(fd);
    CHECK_FALSE(v.pass);
    REQUIRE_FALSE(v.counterexample.empty());
    const Event &e = fd.events[v.counterexample[0]];
    CHECK(e.kind == EventKind::Drop);
}

TEST_CASE("N verdicts")
{
    CHECK(check_N(small(Strategy::WeakO).trace).pass);
    CHECK(check_N(small(Strategy::NoMigration).trace).pass);
    const Trace &ba = small(Strategy::BufferAll).trace;
    const Verdict v = check_N(ba);
    CHECK_FALSE(v.pass);
    REQUIRE(v.counterexample.size() == 1);
    std::size_t first_buffer = 0;
    while (ba.events[first_buffer].kind != EventKind::Buffer)
    {
        ++first_buffer;
    }
    CHECK(v.counterexample[0] == first_buffer);
}

TEST_CASE("O and SO verdicts")
{
    CHECK(check_O(small(Strategy::BufferAll).trace).pass);
    CHECK(check_SO(small(Strategy::BufferAll).trace).pass);
    const Verdict none = check_O(small(Strategy::NoMigration).trace);
    CHECK(none.pass);
    CHECK(check_SO(small(Strategy::NoMigration).trace).pass);

    // In-flight packets at the flip: the destination starts from a state the
    // ideal NF never passes through.
    const fms::RunResult &r = slow_old_path();
    REQUIRE(r.stats.in_flight_at_reroute > 0);
    const Verdict o = check_O(r.trace);
    CHECK_FALSE(o.pass);
    CHECK(o.explanation.find("Q2 is not a suffix") != std::string::npos);
    const Verdict so = check_SO(r.trace);
    CHECK_FALSE(so.pass);
    CHECK(so.explanation.find("O fails") != std::string::npos);
}

TEST_CASE("E verdicts")
{
    CHECK(check_E(small(Strategy::BufferAll).trace).pass);
    CHECK(check_E(small(Strategy::NoMigration).trace).pass);

    const fms::RunResult &r = slow_old_path();
    const Verdict v = check_E(r.trace);
    CHECK_FALSE(v.pass);
    REQUIRE(v.counterexample.size() == 2);
    // The later exit overtook an earlier-admitted packet of the same direction.
    const Event &early = r.trace.events[v.counterexample[0]];
    const Event &late = r.trace.events[v.counterexample[1]];
    CHECK(early.kind == EventKind::ExitFMS);
    CHECK(late.kind == EventKind::ExitFMS);
    CHECK(v.counterexample[0] < v.counterexample[1]);
    CHECK(r.trace.packet(early.packet).direction == r.trace.packet(late.packet).direction);
}

TEST_CASE("E fails when two exits of a NoMigration trace are swapped")
{
    Trace t = small(Strategy::NoMigration).trace;
    std::vector<std::size_t> exits;
    for (std::size_t i = 0; i < t.events.size(); ++i)
    {
        const Event &e = t.events[i];
        if (e.kind == EventKind::ExitFMS && t.packet(e.packet).direction == Direction::Forward &&
            t.packet(e.packet).kind == PacketKind::Data)
        {
            exits.push_back(i);
        }
    }
    REQUIRE(exits.size() > 20);
    std::swap(t.events[exits[10]].packet, t.events[exits[11]].packet);
    const Verdict v = check_E(t);
    CHECK_FALSE(v.pass);
    CHECK(v.counterexample.size() == 2);
    CHECK(check_L(t).pass);
}

TEST_CASE("eventual synchronization verdicts")
{
    CHECK(check_eventual_sync(small(Strategy::WeakO).trace).pass);
    CHECK(check_eventual_sync(small(Strategy::NoMigration).trace).pass);

    fms::FaultInjection f;
    f.suppress_other_message = 0;
    for (nf::NfKind kind : {nf::NfKind::Nat, nf::NfKind::Counter})
    {
        fms::Scenario sc = test::small_scenario(Strategy::WeakO, 1);
        sc.nf.kind = kind;
        const fms::RunResult r = fms::run_simulation(sc, f);
        const Verdict v = check_eventual_sync(r.trace);
        CHECK_FALSE(v.pass);
        CHECK_FALSE(v.counterexample.empty());
        CHECK_FALSE(check_weak_o(r.trace).r2.pass);
    }
}

TEST_CASE("Weak-O verdicts")
{
    const WeakOVerdict ok = check_weak_o(small(Strategy::WeakO).trace);
    CHECK(ok.r1.pass);
    CHECK(ok.r2.pass);

    for (Strategy s : {Strategy::AdversarialSkipQueue, Strategy::AdversarialMidCsp})
    {
        const fms::RunResult r = adversarial(s, 1);
        const WeakOVerdict w = check_weak_o(r.trace);
        CHECK_FALSE(w.r1.pass);
        REQUIRE_FALSE(w.r1.counterexample.empty());
        // The witness starts at the destination NFProcess that ran too early.
        const Event &e = r.trace.events[w.r1.counterexample.front()];
        CHECK(e.kind == EventKind::NFProcess);
        CHECK(e.site == Node::NfDst);
    }

    for (Strategy s : {Strategy::WeakO, Strategy::BufferAll, Strategy::AdversarialSkipQueue})
    {
        fms::Scenario sc = test::small_scenario(s);
        sc.nf.kind = nf::NfKind::Dpi;
        sc.message_delay_ms = 150;
        const Verdict v = check_weak_o(fms::run_simulation(sc).trace).r1;
        CHECK(v.pass);
    }
}

TEST_CASE("CSP oracle: NAT SYN is the only CSP and carries the mapping")
{
    const nf::NfConfig nat = nf_of(nf::NfKind::Nat);
    const std::vector<Packet> flow = {fwd(PacketKind::Syn, 1), fwd(PacketKind::Data, 2, 1), fwd(PacketKind::Data, 3, 2)};
    const auto ranges = detect_csp_oracle(nat, flow);
    REQUIRE(ranges.size() == 1);
    CHECK(ranges[0].begin == 0);
    CHECK(ranges[0].end == 1);
    CHECK(ranges[0].css == nf::IndexSet{1, 2, 3, 4});
    CHECK(declared_csp_ranges(nat, flow) == ranges);
}

TEST_CASE("CSP oracle: counter and DPI have no CSP")
{
    std::vector<Packet> flow;
    for (Timestamp ts = 1; ts <= 8; ++ts)
    {
        flow.push_back(fwd(ts == 1 ? PacketKind::Syn : PacketKind::Data, ts, ts - 1));
    }
    CHECK(detect_csp_oracle(nf_of(nf::NfKind::Counter), flow).empty());
    CHECK(detect_csp_oracle(nf_of(nf::NfKind::Dpi), flow).empty());
}

TEST_CASE("CSP oracle refuses flows above the cap")
{
    std::vector<Packet> flow;
    for (Timestamp ts = 1; ts <= static_cast<Timestamp>(kOracleCap) + 1; ++ts)
    {
        flow.push_back(fwd(PacketKind::Data, ts, ts));
    }
    CHECK_THROWS_AS(detect_csp_oracle(nf_of(nf::NfKind::Nat), flow), OracleSizeError);
    flow.pop_back();
    CHECK_NOTHROW(detect_csp_oracle(nf_of(nf::NfKind::Nat), flow));
}

TEST_CASE("reorder metrics")
{
    const ReorderMetrics in_order = reorder_metrics(std::vector<Timestamp>{1, 2, 3, 4});
    CHECK(in_order.max_displacement == 0);
    CHECK(in_order.displaced_count == 0);
    const ReorderMetrics swapped = reorder_metrics(std::vector<Timestamp>{1, 3, 2});
    CHECK(swapped.max_displacement == 1);
    CHECK(swapped.displaced_count == 1);
    // Oracle by hand: 4 exits first, three places late.
    const ReorderMetrics jump = reorder_metrics(std::vector<Timestamp>{10, 20, 30, 40});
    CHECK(jump.max_displacement == 0);
    const ReorderMetrics late = reorder_metrics(std::vector<Timestamp>{2, 3, 4, 1});
    CHECK(late.max_displacement == 3);
    CHECK(late.displaced_count == 1);
}

TEST_CASE("reordering of an equal-paths WeakO run is bounded by the packets in flight at the flip")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
    {
        const fms::RunResult r = fms::run_simulation(test::small_scenario(Strategy::WeakO, seed));
        const ReorderMetrics m = reorder_metrics(r.trace);
        CHECK(m.displaced_count <= r.stats.in_flight_at_reroute);
    }
}

TEST_CASE("check_all is total and well formed across strategies and NFs")
{
    for (Strategy s : {Strategy::WeakO, Strategy::BufferAll, Strategy::FreezeDrop, Strategy::NoMigration,
                       Strategy::AdversarialSkipQueue, Strategy::AdversarialMidCsp})
    {
        for (nf::NfKind k : {nf::NfKind::Nat, nf::NfKind::Counter, nf::NfKind::Dpi})
        {
            fms::Scenario sc = test::small_scenario(s, 2);
            sc.nf.kind = k;
            const std::vector<Verdict> vs = check_all(fms::run_simulation(sc).trace);
            REQUIRE(vs.size() == kAllProperties.size());
            for (std::size_t i = 0; i < vs.size(); ++i)
            {
                CHECK(vs[i].property == kAllProperties[i]);
                check_verdict_shape(vs[i]);
            }
        }
    }
}

TEST_CASE("property names round-trip")
{
    for (Property p : kAllProperties)
    {
        CHECK(property_from(to_string(p)) == p);
    }
    CHECK_THROWS(property_from("Z"));
}
