#include "flowmig/cli/commands.hpp"

#include "flowmig/checkers/checkers.hpp"
#include "flowmig/core/sequence.hpp"
#include "flowmig/core/trace_io.hpp"
#include "flowmig/experiment/report.hpp"
#include "flowmig/experiment/sweep.hpp"
#include "flowmig/fms/feasibility.hpp"
#include "flowmig/transport/goodput.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace flowmig::cli
{
    namespace
    {
        namespace fs = std::filesystem;
        using nlohmann::json;

        struct Options
        {
            std::string scenario;
            std::string spec;
            std::string out_dir = ".";
            std::int64_t seed = -1;
            int reps = 0;
            bool parallel = false;
            bool no_check = false;
            std::string input;
            std::string properties;
        };

        json verdicts_json(const std::vector<checkers::Verdict> &vs)
        {
            json arr = json::array();
            for (const checkers::Verdict &v : vs)
            {
                arr.push_back({{"property", std::string(checkers::to_string(v.property))},
                               {"pass", v.pass},
                               {"counterexample", v.counterexample},
                               {"explanation", v.explanation}});
            }
            return arr;
        }

        void print_verdicts(std::ostream &out, const std::vector<checkers::Verdict> &vs)
        {
            for (const checkers::Verdict &v : vs)
            {
                out << checkers::to_string(v.property) << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.explanation;
                if (!v.counterexample.empty())
                {
                    out << "  [events";
                    for (std::size_t e : v.counterexample)
                    {
                        out << ' ' << e;
                    }
                    out << ']';
                }
                out << '\n';
            }
        }

        void write_text(const fs::path &p, const std::string &text)
        {
            std::ofstream f(p, std::ios::binary);
            if (!f)
            {
                throw std::runtime_error("cannot write " + p.string());
            }
            f << text;
        }

        int cmd_run(const Options &o, std::ostream &out)
        {
            fms::Scenario sc = fms::load_scenario(o.scenario);
            if (o.seed >= 0)
            {
                sc.seed = static_cast<std::uint64_t>(o.seed);
            }
            fms::validate(sc);

            const fms::FeasibilityReport feas = fms::validate_feasibility(sc, nf::schema_for(sc.nf.kind));
            fms::RunResult res = fms::run_simulation(sc);
            const transport::TransferStats ts = transport::transfer_stats(res.trace);
            const double goodput = ts.complete() ? transport::goodput_bps(ts) : 0.0;
            const checkers::ReorderMetrics rm = checkers::reorder_metrics(res.trace);
            std::vector<checkers::Verdict> verdicts;
            if (!o.no_check)
            {
                verdicts = checkers::check_all(res.trace);
            }

            fs::create_directories(o.out_dir);
            const fs::path trace_path = fs::path(o.out_dir) / "trace.jsonl";
            save_trace(trace_path, res.trace);

            const fms::RunStats &s = res.stats;
            json summary = {
                {"scenario_id", sc.scenario_id},
                {"seed", sc.seed},
                {"strategy", std::string(fms::to_string(sc.strategy))},
                {"completed", ts.complete()},
                {"goodput_bps", goodput},
                {"delivered_bytes", ts.delivered_bytes},
                {"finish_time_us", s.finish_time},
                {"migration_start_us", s.migration_start},
                {"reroute_us", s.reroute_at},
                {"migration_end_us", s.migration_end},
                {"in_flight_at_reroute", s.in_flight_at_reroute},
                {"buffered", s.buffered},
                {"dropped", s.dropped},
                {"dup_acks", s.dup_acks},
                {"retransmits", s.retransmits},
                {"spurious_retransmits", s.spurious_retransmits},
                {"dsacks", s.dsacks},
                {"rto_count", s.rto_count},
                {"final_dupthresh", s.final_dupthresh},
                {"max_reorder_displacement", rm.max_displacement},
                {"displaced_count", rm.displaced_count},
                {"feasible", feas.feasible},
                {"feasibility", feas.reason},
                {"verdicts", verdicts_json(verdicts)},
            };
            write_text(fs::path(o.out_dir) / "summary.json", summary.dump(2) + "\n");

            out << "scenario " << sc.scenario_id << " seed " << sc.seed << " strategy " << fms::to_string(sc.strategy)
                << '\n';
            out << "goodput_bps " << goodput << (ts.complete() ? "" : " (incomplete transfer)") << '\n';
            out << "events " << res.trace.events.size() << " buffered " << s.buffered << " dropped " << s.dropped
                << " retransmits " << s.retransmits << " spurious " << s.spurious_retransmits << '\n';
            print_verdicts(out, verdicts);
            out << "trace " << trace_path.string() << '\n';
            return kExitOk;
        }

        int cmd_sweep(const Options &o, std::ostream &out)
        {
            experiment::SweepSpec spec = experiment::load_sweep_spec(o.spec);
            if (o.reps > 0)
            {
                spec.reps = o.reps;
            }
            if (o.seed >= 0)
            {
                spec.base.seed = static_cast<std::uint64_t>(o.seed);
            }
            if (o.no_check)
            {
                spec.check = false;
            }
            for (double v : spec.values)
            {
                fms::Scenario sc = experiment::apply_point(spec.base, spec.param, v);
                sc.strategy = spec.strategy;
                fms::validate(sc);
            }
            const std::vector<experiment::SweepRow> rows = experiment::run_sweep(spec, o.parallel);
            fs::create_directories(o.out_dir);
            const fs::path csv = fs::path(o.out_dir) / "sweep.csv";
            std::ofstream f(csv, std::ios::binary);
            if (!f)
            {
                throw std::runtime_error("cannot write " + csv.string());
            }
            experiment::write_csv(f, rows);
            std::size_t failed = 0;
            for (const auto &r : rows)
            {
                failed += r.ok() ? 0 : 1;
            }
            out << rows.size() << " rows (" << failed << " failed runs) -> " << csv.string() << '\n';
            return kExitOk;
        }

        int cmd_check(const Options &o, std::ostream &out)
        {
            const Trace t = load_trace(o.input);
            validate_trace(t);
            std::vector<checkers::Verdict> all = checkers::check_all(t);
            std::vector<checkers::Verdict> chosen;
            if (o.properties.empty())
            {
                chosen = all;
            }
            else
            {
                std::istringstream ss(o.properties);
                std::string name;
                while (std::getline(ss, name, ','))
                {
                    const checkers::Property p = checkers::property_from(name);
                    for (const auto &v : all)
                    {
                        if (v.property == p)
                        {
                            chosen.push_back(v);
                        }
                    }
                }
            }
            print_verdicts(out, chosen);
            const fs::path report = o.out_dir == "."
                                        ? fs::path(o.input + ".verdicts.json")
                                        : fs::path(o.out_dir) / (fs::path(o.input).filename().string() + ".verdicts.json");
            if (o.out_dir != ".")
            {
                fs::create_directories(o.out_dir);
            }
            write_text(report, verdicts_json(chosen).dump(2) + "\n");
            for (const auto &v : chosen)
            {
                if (!v.pass)
                {
                    return kExitFailed;
                }
            }
            return kExitOk;
        }

        int cmd_report(const Options &o, std::ostream &out)
        {
            std::ifstream f(o.input);
            if (!f)
            {
                throw fms::ConfigError("<csv>", "cannot open " + o.input);
            }
            const std::vector<experiment::SweepRow> rows = experiment::read_csv(f);
            const experiment::Report r = experiment::summarize(rows);
            out << experiment::format_report(r);
            return kExitOk;
        }
    } // namespace

    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Flow migration simulator and property checker"};
        app.require_subcommand(1);
        Options o;

        CLI::App *run = app.add_subcommand("run", "Simulate one scenario, write its trace and summary");
        run->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
        run->add_option("--seed", o.seed, "Override the scenario seed");
        run->add_option("--out-dir", o.out_dir, "Output directory");
        run->add_flag("--no-check", o.no_check, "Skip property checks");

        CLI::App *sweep = app.add_subcommand("sweep", "Paired parameter sweep to CSV");
        sweep->add_option("--spec", o.spec, "Sweep spec JSON file")->required();
        sweep->add_option("--out-dir", o.out_dir, "Output directory");
        sweep->add_option("--seed", o.seed, "Override the base seed");
        sweep->add_option("--reps", o.reps, "Repetitions per point");
        sweep->add_flag("--parallel", o.parallel, "Run the batch with OpenMP");
        sweep->add_flag("--no-check", o.no_check, "Skip property checks");

        CLI::App *check = app.add_subcommand("check", "Check properties of a trace file");
        check->add_option("trace", o.input, "Trace file (JSON lines)")->required();
        check->add_option("--properties", o.properties, "Comma-separated subset, e.g. L,N,WeakO_R1");
        check->add_option("--out-dir", o.out_dir, "Directory for the verdict report");

        CLI::App *report = app.add_subcommand("report", "Summarize a sweep CSV");
        report->add_option("csv", o.input, "Sweep CSV")->required();

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitConfig;
        }

        try
        {
            if (run->parsed())
            {
                return cmd_run(o, out);
            }
            if (sweep->parsed())
            {
                return cmd_sweep(o, out);
            }
            if (check->parsed())
            {
                return cmd_check(o, out);
            }
            return cmd_report(o, out);
        }
        catch (const fms::ConfigError &e)
        {
            err << "config error: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const MalformedTraceError &e)
        {
            err << "malformed trace: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const std::invalid_argument &e)
        {
            err << "invalid input: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitFailed;
        }
    }
} // namespace flowmig::cli
