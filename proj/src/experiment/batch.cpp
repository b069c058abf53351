#include "flowmig/experiment/batch.hpp"

#include "flowmig/transport/goodput.hpp"

#include <algorithm>
#include <exception>

namespace flowmig::experiment
{
    bool RunRecord::passes(checkers::Property p) const
    {
        auto it = std::find_if(verdicts.begin(), verdicts.end(),
                               [p](const checkers::Verdict &v) { return v.property == p; });
        return it != verdicts.end() && it->pass;
    }

    RunRecord execute(const fms::Scenario &sc, const RunOptions &opt)
    {
        RunRecord r;
        r.scenario_id = sc.scenario_id;
        r.seed = sc.seed;
        r.strategy = sc.strategy;
        try
        {
            fms::RunResult res = fms::run_simulation(sc, opt.faults);
            r.stats = res.stats;
            r.goodput_bps = transport::compute_goodput(res.trace);
            r.reorder = checkers::reorder_metrics(res.trace);
            if (opt.check)
            {
                r.verdicts = checkers::check_all(res.trace);
            }
            if (opt.keep_trace)
            {
                r.trace = std::move(res.trace);
            }
            r.ok = true;
        }
        catch (const std::exception &e)
        {
            r.error = e.what();
        }
        return r;
    }

    std::vector<RunRecord> run_batch_serial(const std::vector<fms::Scenario> &runs, const RunOptions &opt)
    {
        std::vector<RunRecord> out;
        out.reserve(runs.size());
        for (const fms::Scenario &sc : runs)
        {
            out.push_back(execute(sc, opt));
        }
        return out;
    }

    std::vector<RunRecord> run_batch_parallel(const std::vector<fms::Scenario> &runs, const RunOptions &opt)
    {
        std::vector<RunRecord> out(runs.size());
        const auto n = static_cast<std::int64_t>(runs.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i)
        {
            out[static_cast<std::size_t>(i)] = execute(runs[static_cast<std::size_t>(i)], opt);
        }
        return out;
    }
} // namespace flowmig::experiment
