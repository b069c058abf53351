#include "flowmig/cli/commands.hpp"
#include "flowmig/core/trace_io.hpp"
#include "flowmig/experiment/report.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace flowmig;
using namespace flowmig::experiment;
using fms::Strategy;
namespace fs = std::filesystem;

namespace
{
    struct CliResult
    {
        int code = 0;
        std::string out;
        std::string err;
    };

    CliResult invoke(std::vector<std::string> args)
    {
        args.insert(args.begin(), "flowmig");
        std::vector<const char *> argv;
        for (const std::string &a : args)
        {
            argv.push_back(a.c_str());
        }
        std::ostringstream out, err;
        CliResult r;
        r.code = flowmig::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        r.out = out.str();
        r.err = err.str();
        return r;
    }

    fs::path scratch(const std::string &name)
    {
        const fs::path p = fs::temp_directory_path() / ("flowmig_test_" + name);
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }

    void write_file(const fs::path &p, const std::string &text)
    {
        std::ofstream f(p, std::ios::binary);
        f << text;
    }

    std::string read_file(const fs::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    const char *kSmallScenario = R"({"scenario_id":"cli","flow":{"total_bytes":200000},"t1_s":0.1,"seed":3})";

    SweepRow row(int point, double value, int rep, double goodput, double baseline)
    {
        SweepRow r;
        r.point_id = point;
        r.param_value = value;
        r.rep = rep;
        r.seed = static_cast<std::uint64_t>(rep + 1);
        r.goodput_bps = goodput;
        r.baseline_goodput_bps = baseline;
        r.ratio = goodput / baseline;
        return r;
    }
} // namespace

TEST_CASE("parallel batch equals the serial reference")
{
    std::vector<fms::Scenario> runs;
    for (std::uint64_t seed = 1; seed <= 8; ++seed)
    {
        runs.push_back(test::small_scenario(seed % 2 ? Strategy::WeakO : Strategy::BufferAll, seed));
    }
    runs.push_back(test::small_scenario(Strategy::AdversarialMidCsp, 1));
    RunOptions opt;
    opt.keep_trace = true;
    const auto serial = run_batch_serial(runs, opt);
    const auto parallel = run_batch_parallel(runs, opt);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
    {
        CHECK(serial[i].ok == parallel[i].ok);
        CHECK(serial[i].seed == parallel[i].seed);
        CHECK(serial[i].goodput_bps == parallel[i].goodput_bps);
        CHECK(serial[i].trace == parallel[i].trace);
        REQUIRE(serial[i].verdicts.size() == parallel[i].verdicts.size());
        for (std::size_t k = 0; k < serial[i].verdicts.size(); ++k)
        {
            CHECK(serial[i].verdicts[k].pass == parallel[i].verdicts[k].pass);
            CHECK(serial[i].verdicts[k].counterexample == parallel[i].verdicts[k].counterexample);
        }
    }
}

TEST_CASE("a failing run is recorded, not thrown")
{
    fms::Scenario sc = test::small_scenario(Strategy::BufferAll);
    sc.buffer_cap = 1;
    const RunRecord r = execute(sc);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("buffer") != std::string::npos);
}

TEST_CASE("sweep CSV round-trips")
{
    std::vector<SweepRow> rows = {row(0, 0, 0, 9.5e6, 9.6e6), row(1, 40, 1, 8.25e6, 10e6)};
    rows[1].verdicts = {1, 1, 0, 0, 1, 1, 1, 1};
    rows[1].dup_acks = 17;
    rows[1].retransmits = 3;
    rows[1].spurious_retransmits = 2;
    rows[1].max_reorder_displacement = 9;
    rows[1].strategy = Strategy::BufferAll;
    rows[0].error = "time limit, exceeded";
    std::stringstream ss;
    write_csv(ss, rows);
    const std::string text = ss.str();
    CHECK(text.rfind(csv_header(), 0) == 0);
    const auto back = read_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1] == rows[1]);
    CHECK(back[0].goodput_bps == doctest::Approx(rows[0].goodput_bps));
    CHECK_FALSE(back[0].ok());
    std::stringstream again;
    write_csv(again, back);
    CHECK(again.str() == text);

    std::stringstream bad("not,a,header\n");
    CHECK_THROWS(read_csv(bad));
}

TEST_CASE("a one-point, one-rep sweep equals the paired single runs")
{
    SweepSpec spec;
    spec.base = test::small_scenario(Strategy::WeakO, 11);
    spec.param = SweepParam::NewPathExtraDelayMs;
    spec.values = {10};
    spec.reps = 1;
    const auto rows = run_sweep(spec, false);
    REQUIRE(rows.size() == 1);
    fms::Scenario sc = apply_point(spec.base, spec.param, 10);
    sc.strategy = Strategy::WeakO;
    sc.seed = 11;
    const RunRecord with = execute(sc);
    sc.strategy = Strategy::NoMigration;
    const RunRecord without = execute(sc);
    CHECK(rows[0].seed == 11);
    CHECK(rows[0].goodput_bps == with.goodput_bps);
    CHECK(rows[0].baseline_goodput_bps == without.goodput_bps);
    CHECK(rows[0].ratio == doctest::Approx(with.goodput_bps / without.goodput_bps));
    CHECK(rows[0].retransmits == with.stats.retransmits);
    for (std::size_t k = 0; k < checkers::kAllProperties.size(); ++k)
    {
        CHECK(rows[0].verdicts[k] == (with.verdicts[k].pass ? 1 : 0));
    }
}

TEST_CASE("apply_point moves only the requested parameter")
{
    const fms::Scenario base = fms::default_scenario();
    const fms::Scenario old_slow = apply_point(base, SweepParam::OldPathExtraDelayMs, 40);
    CHECK(old_slow.link(Node::S1, Node::NfSrc).delay_ms == doctest::Approx(50));
    CHECK(old_slow.link(Node::S1, Node::NfDst).delay_ms == doctest::Approx(10));
    CHECK(old_slow.link(Node::H1, Node::S1).delay_ms == doctest::Approx(10));
    const fms::Scenario new_fast = apply_point(base, SweepParam::NewPathBandwidthFactor, 3);
    CHECK(new_fast.link(Node::NfDst, Node::S2).bandwidth_bps == doctest::Approx(30e6));
    CHECK(new_fast.link(Node::NfSrc, Node::S2).bandwidth_bps == doctest::Approx(10e6));
    CHECK(apply_point(base, SweepParam::T1S, 2.5).t1_s == 2.5);
}

TEST_CASE("mean_ci matches a tabulated Student t quantile")
{
    std::vector<double> xs;
    for (int i = 1; i <= 20; ++i)
    {
        xs.push_back(i);
    }
    const Interval ci = mean_ci(xs);
    // t(0.975, 19) = 2.093024 from standard tables; sample sd of 1..20 is sqrt(35).
    CHECK(ci.mean == doctest::Approx(10.5));
    CHECK(ci.n == 20);
    CHECK(ci.half_width == doctest::Approx(2.093024 * std::sqrt(35.0) / std::sqrt(20.0)).epsilon(1e-5));
    CHECK(mean_ci({4.0}).half_width == 0);
}

TEST_CASE("report: empty input, comparability and trend")
{
    CHECK_THROWS_AS(summarize({}), std::invalid_argument);

    std::vector<SweepRow> rows;
    for (int rep = 0; rep < 5; ++rep)
    {
        rows.push_back(row(0, 0, rep, 9.9e6, 10e6));
        rows.push_back(row(1, 40, rep, 9.0e6, 10e6));
    }
    Report r = summarize(rows);
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].comparable);
    CHECK_FALSE(r.points[1].comparable);
    CHECK_FALSE(r.all_comparable);
    CHECK(r.goodput_nonincreasing);
    CHECK(r.max_degradation == doctest::Approx(0.1));
    CHECK(format_report(r).find("comparable") != std::string::npos);

    rows.push_back(row(2, 80, 0, 9.95e6, 10e6));
    r = summarize(rows);
    CHECK_FALSE(r.goodput_nonincreasing);

    rows[0].error = "boom";
    r = summarize(rows);
    CHECK(r.points[0].failed_runs == 1);
    CHECK_FALSE(r.points[0].comparable);
}

TEST_CASE("cli run writes a trace and summary, deterministically")
{
    const fs::path dir = scratch("run");
    write_file(dir / "sc.json", kSmallScenario);
    const CliResult a = invoke({"run", "--scenario", (dir / "sc.json").string(), "--out-dir", (dir / "a").string()});
    CHECK(a.code == cli::kExitOk);
    CHECK(fs::exists(dir / "a" / "summary.json"));
    const CliResult b = invoke({"run", "--scenario", (dir / "sc.json").string(), "--out-dir", (dir / "b").string()});
    CHECK(b.code == cli::kExitOk);
    CHECK(read_file(dir / "a" / "trace.jsonl") == read_file(dir / "b" / "trace.jsonl"));
    CHECK(a.out == b.out.substr(0, b.out.rfind("trace ")) + a.out.substr(a.out.rfind("trace ")));

    const CliResult c = invoke({"run", "--scenario", (dir / "sc.json").string(), "--seed", "4", "--out-dir",
                             (dir / "c").string(), "--no-check"});
    CHECK(c.code == cli::kExitOk);
    CHECK(read_file(dir / "a" / "trace.jsonl") != read_file(dir / "c" / "trace.jsonl"));
}

TEST_CASE("cli check exit codes")
{
    const fs::path dir = scratch("check");
    write_file(dir / "sc.json", kSmallScenario);
    REQUIRE(invoke({"run", "--scenario", (dir / "sc.json").string(), "--out-dir", dir.string(), "--no-check"}).code == 0);
    const std::string trace = (dir / "trace.jsonl").string();

    const CliResult ok = invoke({"check", trace, "--properties", "L,N,WeakO_R1,WeakO_R2"});
    CHECK(ok.code == cli::kExitOk);
    CHECK(ok.out.find("WeakO_R1 PASS") != std::string::npos);
    CHECK(fs::exists(trace + ".verdicts.json"));

    write_file(dir / "ba.json", R"({"flow":{"total_bytes":200000},"t1_s":0.1,"strategy":"BufferAll"})");
    REQUIRE(invoke({"run", "--scenario", (dir / "ba.json").string(), "--out-dir", (dir / "ba").string()}).code == 0);
    const CliResult fail = invoke({"check", (dir / "ba" / "trace.jsonl").string(), "--properties", "N"});
    CHECK(fail.code == cli::kExitFailed);
    CHECK(fail.out.find("N FAIL") != std::string::npos);

    write_file(dir / "broken.jsonl", "{\"format\":\"flowmig-trace/1\"}\n{\"time\":");
    CHECK(invoke({"check", (dir / "broken.jsonl").string()}).code == cli::kExitConfig);
    CHECK(invoke({"check", trace, "--properties", "Q"}).code == cli::kExitConfig);
}

TEST_CASE("cli configuration errors exit with 2")
{
    const fs::path dir = scratch("config");
    CHECK(invoke({"run", "--scenario", std::string(FLOWMIG_TEST_DATA) + "/bad_link.json", "--out-dir", dir.string()}).code ==
          cli::kExitConfig);
    CHECK(invoke({"run", "--scenario", (dir / "missing.json").string()}).code == cli::kExitConfig);
    CHECK(invoke({"run"}).code == cli::kExitConfig);
    CHECK(invoke({"frobnicate"}).code == cli::kExitConfig);
    const CliResult bad = invoke({"run", "--scenario", std::string(FLOWMIG_TEST_DATA) + "/bad_link.json"});
    CHECK(bad.err.find("topology.links[0].delay_ms") != std::string::npos);
}

TEST_CASE("cli sweep and report")
{
    const fs::path dir = scratch("sweep");
    write_file(dir / "spec.json", R"({"base":{"flow":{"total_bytes":200000},"t1_s":0.1},
        "parameter":"new_path_extra_delay_ms","values":[0,10],"reps":2,"strategy":"WeakO"})");
    const CliResult s = invoke({"sweep", "--spec", (dir / "spec.json").string(), "--out-dir", dir.string()});
    CHECK(s.code == cli::kExitOk);
    std::ifstream f(dir / "sweep.csv");
    const auto rows = read_csv(f);
    CHECK(rows.size() == 4);

    const CliResult par = invoke({"sweep", "--spec", (dir / "spec.json").string(), "--out-dir", (dir / "p").string(),
                               "--parallel"});
    CHECK(par.code == cli::kExitOk);
    CHECK(read_file(dir / "sweep.csv") == read_file(dir / "p" / "sweep.csv"));

    const CliResult r = invoke({"report", (dir / "sweep.csv").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("all points comparable") != std::string::npos);

    write_file(dir / "empty.csv", csv_header() + "\n");
    CHECK(invoke({"report", (dir / "empty.csv").string()}).code == cli::kExitConfig);
    write_file(dir / "bad_spec.json", R"({"parameter":"colour","values":[1]})");
    CHECK(invoke({"sweep", "--spec", (dir / "bad_spec.json").string(), "--out-dir", dir.string()}).code ==
          cli::kExitConfig);
}
