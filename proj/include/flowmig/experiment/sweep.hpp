#pragma once

#include "flowmig/experiment/batch.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace flowmig::experiment
{
    enum class SweepParam : std::uint8_t
    {
        OldPathExtraDelayMs,
        NewPathExtraDelayMs,
        NewPathBandwidthFactor,
        AbsoluteDelayMs,
        AbsoluteBandwidthBps,
        PayloadModel, // 0 = fixed, 1 = poisson
        T1S,
    };

    std::string_view to_string(SweepParam p) noexcept;
    SweepParam sweep_param_from(std::string_view s);

    struct SweepSpec
    {
        fms::Scenario base;
        SweepParam param = SweepParam::OldPathExtraDelayMs;
        std::vector<double> values;
        int reps = 20;
        // Migrating strategy; every run is paired with a NoMigration run on the same seed.
        fms::Strategy strategy = fms::Strategy::WeakO;
        bool check = true;
    };

    /// {"base": {scenario keys}, "parameter": name, "values": [...], "reps": n,
    ///  "strategy": name, "check": bool}. Throws fms::ConfigError.
    SweepSpec sweep_spec_from_json_text(const std::string &text);
    SweepSpec load_sweep_spec(const std::filesystem::path &path);

    /// Base scenario with one parameter value applied.
    fms::Scenario apply_point(const fms::Scenario &base, SweepParam param, double value);

    struct SweepRow
    {
        int point_id = 0;
        double param_value = 0;
        int rep = 0;
        std::uint64_t seed = 0;
        fms::Strategy strategy = fms::Strategy::WeakO;
        double goodput_bps = 0;
        double ratio = 0;
        // 1 pass, 0 fail, -1 not evaluated; kAllProperties order.
        std::array<int, 8> verdicts{-1, -1, -1, -1, -1, -1, -1, -1};
        std::int64_t dup_acks = 0;
        std::int64_t retransmits = 0;
        std::int64_t spurious_retransmits = 0;
        std::int64_t max_reorder_displacement = 0;
        double baseline_goodput_bps = 0;
        std::string error;

        bool ok() const noexcept { return error.empty(); }
        bool operator==(const SweepRow &) const = default;
    };

    /// One row per (point, repetition). Run failures are recorded in the row.
    std::vector<SweepRow> run_sweep(const SweepSpec &spec, bool parallel);

    /// Rows from an explicit list of migrating scenarios (each paired with NoMigration).
    std::vector<SweepRow> paired_rows(const std::vector<fms::Scenario> &migrating, const std::vector<int> &point_ids,
                                      const std::vector<double> &values, const std::vector<int> &reps, bool check,
                                      bool parallel);

    std::string csv_header();
    std::string csv_row(const SweepRow &r);
    void write_csv(std::ostream &os, const std::vector<SweepRow> &rows);
    /// Throws std::runtime_error on a malformed line.
    std::vector<SweepRow> read_csv(std::istream &is);
} // namespace flowmig::experiment
