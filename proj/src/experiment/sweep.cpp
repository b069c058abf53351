#include "flowmig/experiment/sweep.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace flowmig::experiment
{
    namespace
    {
        constexpr std::array<std::string_view, 7> kParamNames = {
            "old_path_extra_delay_ms", "new_path_extra_delay_ms", "new_path_bandwidth_factor", "absolute_delay_ms",
            "absolute_bandwidth_bps",  "payload_model",           "t1_s",
        };

        std::string fmt(const char *f, double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, f, v);
            return buf;
        }

        std::string clean(std::string s)
        {
            for (char &c : s)
            {
                if (c == ',' || c == '\n' || c == '\r' || c == '"')
                {
                    c = ';';
                }
            }
            return s;
        }

        std::vector<std::string> split(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cur;
            std::istringstream ss(line);
            while (std::getline(ss, cur, ','))
            {
                out.push_back(cur);
            }
            if (!line.empty() && line.back() == ',')
            {
                out.emplace_back();
            }
            return out;
        }

        SweepRow row_for(int point, double value, int rep, const RunRecord &with, const RunRecord &without)
        {
            SweepRow r;
            r.point_id = point;
            r.param_value = value;
            r.rep = rep;
            r.seed = with.seed;
            r.strategy = with.strategy;
            r.goodput_bps = with.goodput_bps;
            r.baseline_goodput_bps = without.goodput_bps;
            if (!with.ok)
            {
                r.error = clean(with.error);
            }
            else if (!without.ok)
            {
                r.error = clean("baseline: " + without.error);
            }
            if (with.ok && without.ok && without.goodput_bps > 0)
            {
                r.ratio = with.goodput_bps / without.goodput_bps;
            }
            for (std::size_t i = 0; i < with.verdicts.size() && i < r.verdicts.size(); ++i)
            {
                r.verdicts[i] = with.verdicts[i].pass ? 1 : 0;
            }
            r.dup_acks = with.stats.dup_acks;
            r.retransmits = with.stats.retransmits;
            r.spurious_retransmits = with.stats.spurious_retransmits;
            r.max_reorder_displacement = with.reorder.max_displacement;
            return r;
        }
    } // namespace

    std::string_view to_string(SweepParam p) noexcept
    {
        return kParamNames[static_cast<std::size_t>(p)];
    }

    SweepParam sweep_param_from(std::string_view s)
    {
        for (std::size_t i = 0; i < kParamNames.size(); ++i)
        {
            if (kParamNames[i] == s)
            {
                return static_cast<SweepParam>(i);
            }
        }
        throw fms::ConfigError("parameter", "unknown sweep parameter '" + std::string(s) + "'");
    }

    SweepSpec sweep_spec_from_json_text(const std::string &text)
    {
        using nlohmann::json;
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw fms::ConfigError("<spec>", e.what());
        }
        if (!j.is_object())
        {
            throw fms::ConfigError("<spec>", "expected an object");
        }
        SweepSpec s;
        s.base = fms::default_scenario();
        for (const auto &[key, v] : j.items())
        {
            try
            {
                if (key == "base")
                {
                    s.base = fms::scenario_from_json_text(v.dump());
                }
                else if (key == "parameter")
                {
                    s.param = sweep_param_from(v.get<std::string>());
                }
                else if (key == "values")
                {
                    s.values = v.get<std::vector<double>>();
                }
                else if (key == "reps")
                {
                    s.reps = v.get<int>();
                }
                else if (key == "strategy")
                {
                    s.strategy = fms::strategy_from(v.get<std::string>());
                }
                else if (key == "check")
                {
                    s.check = v.get<bool>();
                }
                else
                {
                    throw fms::ConfigError(key, "unknown key");
                }
            }
            catch (const fms::ConfigError &e)
            {
                if (key == "base")
                {
                    throw fms::ConfigError("base." + e.field(), e.what());
                }
                throw;
            }
            catch (const std::exception &e)
            {
                throw fms::ConfigError(key, e.what());
            }
        }
        if (s.values.empty())
        {
            throw fms::ConfigError("values", "at least one value required");
        }
        if (s.reps < 1)
        {
            throw fms::ConfigError("reps", "must be >= 1");
        }
        if (!fms::migrates(s.strategy))
        {
            throw fms::ConfigError("strategy", "must be a migrating strategy");
        }
        return s;
    }

    SweepSpec load_sweep_spec(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw fms::ConfigError("<spec>", "cannot open " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return sweep_spec_from_json_text(ss.str());
    }

    fms::Scenario apply_point(const fms::Scenario &base, SweepParam param, double value)
    {
        fms::Scenario sc = base;
        switch (param)
        {
        case SweepParam::OldPathExtraDelayMs:
            fms::add_path_delay(sc, true, value);
            break;
        case SweepParam::NewPathExtraDelayMs:
            fms::add_path_delay(sc, false, value);
            break;
        case SweepParam::NewPathBandwidthFactor:
            fms::scale_path_bandwidth(sc, false, value);
            break;
        case SweepParam::AbsoluteDelayMs:
            for (fms::LinkSpec &l : sc.links)
            {
                l.delay_ms = value;
            }
            break;
        case SweepParam::AbsoluteBandwidthBps:
            for (fms::LinkSpec &l : sc.links)
            {
                l.bandwidth_bps = value;
            }
            break;
        case SweepParam::PayloadModel:
            sc.flow.arrival = value != 0 ? fms::Arrival::Poisson : fms::Arrival::Fixed;
            break;
        case SweepParam::T1S:
            sc.t1_s = value;
            break;
        }
        return sc;
    }

    std::vector<SweepRow> paired_rows(const std::vector<fms::Scenario> &migrating, const std::vector<int> &point_ids,
                                      const std::vector<double> &values, const std::vector<int> &reps, bool check,
                                      bool parallel)
    {
        std::vector<fms::Scenario> all;
        all.reserve(migrating.size() * 2);
        for (const fms::Scenario &sc : migrating)
        {
            all.push_back(sc);
            fms::Scenario base = sc;
            base.strategy = fms::Strategy::NoMigration;
            all.push_back(base);
        }
        RunOptions opt;
        opt.check = check;
        const std::vector<RunRecord> rec = parallel ? run_batch_parallel(all, opt) : run_batch_serial(all, opt);
        std::vector<SweepRow> rows;
        for (std::size_t i = 0; i < migrating.size(); ++i)
        {
            rows.push_back(row_for(point_ids[i], values[i], reps[i], rec[2 * i], rec[2 * i + 1]));
        }
        return rows;
    }

    std::vector<SweepRow> run_sweep(const SweepSpec &spec, bool parallel)
    {
        std::vector<fms::Scenario> runs;
        std::vector<int> points;
        std::vector<double> values;
        std::vector<int> reps;
        for (std::size_t p = 0; p < spec.values.size(); ++p)
        {
            const fms::Scenario point = apply_point(spec.base, spec.param, spec.values[p]);
            for (int rep = 0; rep < spec.reps; ++rep)
            {
                fms::Scenario sc = point;
                sc.strategy = spec.strategy;
                sc.seed = spec.base.seed + static_cast<std::uint64_t>(rep);
                sc.scenario_id = spec.base.scenario_id + "/p" + std::to_string(p) + "/r" + std::to_string(rep);
                runs.push_back(std::move(sc));
                points.push_back(static_cast<int>(p));
                values.push_back(spec.values[p]);
                reps.push_back(rep);
            }
        }
        return paired_rows(runs, points, values, reps, spec.check, parallel);
    }

    std::string csv_header()
    {
        std::string h = "point_id,param_value,rep,seed,strategy,goodput_bps,ratio";
        for (checkers::Property p : checkers::kAllProperties)
        {
            h += ",";
            h += checkers::to_string(p);
        }
        h += ",dup_acks,retransmits,spurious_retransmits,max_reorder_displacement,baseline_goodput_bps,error";
        return h;
    }

    std::string csv_row(const SweepRow &r)
    {
        std::string s = std::to_string(r.point_id) + "," + fmt("%.10g", r.param_value) + "," + std::to_string(r.rep) +
                        "," + std::to_string(r.seed) + "," + std::string(fms::to_string(r.strategy)) + "," +
                        fmt("%.3f", r.goodput_bps) + "," + fmt("%.6f", r.ratio);
        for (int v : r.verdicts)
        {
            s += v < 0 ? ",NA" : (v ? ",1" : ",0");
        }
        s += "," + std::to_string(r.dup_acks) + "," + std::to_string(r.retransmits) + "," +
             std::to_string(r.spurious_retransmits) + "," + std::to_string(r.max_reorder_displacement) + "," +
             fmt("%.3f", r.baseline_goodput_bps) + "," + clean(r.error);
        return s;
    }

    void write_csv(std::ostream &os, const std::vector<SweepRow> &rows)
    {
        os << csv_header() << '\n';
        for (const SweepRow &r : rows)
        {
            os << csv_row(r) << '\n';
        }
    }

    std::vector<SweepRow> read_csv(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line))
        {
            return {};
        }
        if (line != csv_header())
        {
            throw std::runtime_error("CSV header does not match the sweep schema");
        }
        std::vector<SweepRow> rows;
        int lineno = 1;
        while (std::getline(is, line))
        {
            ++lineno;
            if (line.empty())
            {
                continue;
            }
            const std::vector<std::string> f = split(line);
            if (f.size() != 21)
            {
                throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected 21 fields, got " +
                                         std::to_string(f.size()));
            }
            try
            {
                SweepRow r;
                r.point_id = std::stoi(f[0]);
                r.param_value = std::stod(f[1]);
                r.rep = std::stoi(f[2]);
                r.seed = std::stoull(f[3]);
                r.strategy = fms::strategy_from(f[4]);
                r.goodput_bps = std::stod(f[5]);
                r.ratio = std::stod(f[6]);
                for (std::size_t k = 0; k < 8; ++k)
                {
                    r.verdicts[k] = f[7 + k] == "NA" ? -1 : std::stoi(f[7 + k]);
                }
                r.dup_acks = std::stoll(f[15]);
                r.retransmits = std::stoll(f[16]);
                r.spurious_retransmits = std::stoll(f[17]);
                r.max_reorder_displacement = std::stoll(f[18]);
                r.baseline_goodput_bps = std::stod(f[19]);
                r.error = f[20];
                rows.push_back(std::move(r));
            }
            catch (const std::exception &e)
            {
                throw std::runtime_error("CSV line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return rows;
    }
} // namespace flowmig::experiment
