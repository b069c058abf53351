#pragma once

#include "flowmig/checkers/checkers.hpp"
#include "flowmig/fms/simulator.hpp"

#include <array>
#include <string>
#include <vector>

namespace flowmig::experiment
{
    struct RunOptions
    {
        bool check = true;
        bool keep_trace = false;
        fms::FaultInjection faults;
    };

    /// Outcome of one simulation; failures are recorded, never thrown.
    struct RunRecord
    {
        std::string scenario_id;
        std::uint64_t seed = 0;
        fms::Strategy strategy = fms::Strategy::WeakO;
        bool ok = false;
        std::string error;

        double goodput_bps = 0;
        fms::RunStats stats;
        checkers::ReorderMetrics reorder;
        // Indexed like checkers::kAllProperties; empty when checks were skipped.
        std::vector<checkers::Verdict> verdicts;
        Trace trace;

        bool passes(checkers::Property p) const;
    };

    RunRecord execute(const fms::Scenario &sc, const RunOptions &opt = {});

    /// Reference loop.
    std::vector<RunRecord> run_batch_serial(const std::vector<fms::Scenario> &runs, const RunOptions &opt = {});

    /// One OpenMP task per scenario; results in input order, identical to the serial loop.
    std::vector<RunRecord> run_batch_parallel(const std::vector<fms::Scenario> &runs, const RunOptions &opt = {});
} // namespace flowmig::experiment
