#include "flowmig/experiment/report.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace flowmig::experiment
{
    Interval mean_ci(const std::vector<double> &xs)
    {
        Interval iv;
        iv.n = xs.size();
        if (xs.empty())
        {
            return iv;
        }
        iv.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        if (xs.size() < 2)
        {
            return iv;
        }
        double ss = 0;
        for (double x : xs)
        {
            ss += (x - iv.mean) * (x - iv.mean);
        }
        const double n = static_cast<double>(xs.size());
        const double sd = std::sqrt(ss / (n - 1));
        const boost::math::students_t dist(n - 1);
        iv.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
        return iv;
    }

    Report summarize(const std::vector<SweepRow> &rows)
    {
        if (rows.empty())
        {
            throw std::invalid_argument("no sweep rows to summarize");
        }
        std::map<int, std::vector<const SweepRow *>> by_point;
        for (const SweepRow &r : rows)
        {
            by_point[r.point_id].push_back(&r);
        }

        Report rep;
        rep.all_comparable = true;
        rep.goodput_nonincreasing = true;
        for (const auto &[id, group] : by_point)
        {
            PointSummary s;
            s.point_id = id;
            s.param_value = group.front()->param_value;
            s.runs = group.size();
            std::vector<double> g, b, ratio;
            for (const SweepRow *r : group)
            {
                if (!r->ok())
                {
                    ++s.failed_runs;
                    continue;
                }
                g.push_back(r->goodput_bps);
                b.push_back(r->baseline_goodput_bps);
                ratio.push_back(r->ratio);
                for (std::size_t k = 0; k < 8; ++k)
                {
                    s.passes[k] += r->verdicts[k] == 1 ? 1 : 0;
                }
            }
            s.goodput = mean_ci(g);
            s.baseline = mean_ci(b);
            s.ratio = mean_ci(ratio);
            s.comparable = s.failed_runs == 0 && s.ratio.n > 0 && s.ratio.mean >= kComparableRatio;
            rep.all_comparable = rep.all_comparable && s.comparable;
            if (!rep.points.empty() && s.goodput.mean > rep.points.back().goodput.mean)
            {
                rep.goodput_nonincreasing = false;
            }
            rep.max_degradation = std::max(rep.max_degradation, 1.0 - s.ratio.mean);
            rep.points.push_back(s);
        }
        return rep;
    }

    std::string format_report(const Report &r)
    {
        std::string out;
        char line[256];
        std::snprintf(line, sizeof line, "%5s %12s %5s %6s %22s %22s %18s %s\n", "point", "value", "runs", "failed",
                      "goodput Mbps (95% CI)", "baseline Mbps", "ratio", "flag");
        out += line;
        for (const PointSummary &p : r.points)
        {
            std::snprintf(line, sizeof line, "%5d %12g %5zu %6zu %12.4f +- %6.4f %12.4f +- %6.4f %8.4f +- %6.4f %s\n",
                          p.point_id, p.param_value, p.runs, p.failed_runs, p.goodput.mean / 1e6,
                          p.goodput.half_width / 1e6, p.baseline.mean / 1e6, p.baseline.half_width / 1e6, p.ratio.mean,
                          p.ratio.half_width, p.comparable ? "comparable" : "-");
            out += line;
        }
        std::snprintf(line, sizeof line, "all points comparable (ratio >= %.2f): %s\n", kComparableRatio,
                      r.all_comparable ? "yes" : "no");
        out += line;
        std::snprintf(line, sizeof line, "mean goodput non-increasing across points: %s\n",
                      r.goodput_nonincreasing ? "yes" : "no");
        out += line;
        std::snprintf(line, sizeof line, "max mean degradation: %.2f%%\n", r.max_degradation * 100);
        out += line;
        return out;
    }
} // namespace flowmig::experiment
