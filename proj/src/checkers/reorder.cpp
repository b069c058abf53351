#include "flowmig/checkers/checkers.hpp"

#include <algorithm>

namespace flowmig::checkers
{
    ReorderMetrics reorder_metrics(const std::vector<Timestamp> &exit_order_admit_ts)
    {
        std::vector<Timestamp> sorted = exit_order_admit_ts;
        std::sort(sorted.begin(), sorted.end());
        ReorderMetrics m;
        for (std::size_t i = 0; i < exit_order_admit_ts.size(); ++i)
        {
            const auto rank = std::lower_bound(sorted.begin(), sorted.end(), exit_order_admit_ts[i]) - sorted.begin();
            const std::int64_t d = static_cast<std::int64_t>(i) - rank;
            if (d > 0)
            {
                ++m.displaced_count;
                m.max_displacement = std::max(m.max_displacement, d);
            }
        }
        return m;
    }

    ReorderMetrics reorder_metrics(const Trace &t)
    {
        std::vector<Timestamp> fwd;
        std::vector<Timestamp> rev;
        for (const Event &e : t.events)
        {
            if (e.kind == EventKind::ExitFMS)
            {
                const Packet &p = t.packet(e.packet);
                (p.direction == Direction::Forward ? fwd : rev).push_back(p.admit_ts);
            }
        }
        const ReorderMetrics a = reorder_metrics(fwd);
        const ReorderMetrics b = reorder_metrics(rev);
        return ReorderMetrics{std::max(a.max_displacement, b.max_displacement), a.displaced_count + b.displaced_count};
    }
} // namespace flowmig::checkers
