#pragma once

#include "flowmig/experiment/sweep.hpp"

#include <string>
#include <vector>

namespace flowmig::experiment
{
    struct Interval
    {
        double mean = 0;
        double half_width = 0; // 95% Student-t; 0 with fewer than two samples
        std::size_t n = 0;
    };

    Interval mean_ci(const std::vector<double> &xs);

    inline constexpr double kComparableRatio = 0.95;

    struct PointSummary
    {
        int point_id = 0;
        double param_value = 0;
        std::size_t runs = 0;
        std::size_t failed_runs = 0;
        Interval goodput;
        Interval baseline;
        Interval ratio;
        bool comparable = false;
        // Passing runs per property, kAllProperties order.
        std::array<std::size_t, 8> passes{};
    };

    struct Report
    {
        std::vector<PointSummary> points;
        bool all_comparable = false;
        // Mean goodput with migration never rises from one point to the next.
        bool goodput_nonincreasing = false;
        double max_degradation = 0;
    };

    /// Throws std::invalid_argument on an empty row set.
    Report summarize(const std::vector<SweepRow> &rows);
    std::string format_report(const Report &r);
} // namespace flowmig::experiment
