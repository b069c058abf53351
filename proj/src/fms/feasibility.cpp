#include "flowmig/fms/feasibility.hpp"

#include <algorithm>

namespace flowmig::fms
{
    FeasibilityReport assess_feasibility(Tick t_m, Tick t_r, Tick nsp_start_delay, Tick nsp_duration, Tick t_s)
    {
        FeasibilityReport r;
        r.t_m = t_m;
        r.t_r = t_r;
        r.t_s = t_s;
        r.nsp_start_delay = nsp_start_delay;
        r.nsp_duration = nsp_duration;
        r.nsp_within_ts = nsp_start_delay <= t_s;
        r.window_ok = nsp_duration == kUnbounded || t_m + t_r < nsp_duration;
        r.feasible = r.nsp_within_ts && r.window_ok;
        if (!r.nsp_within_ts)
        {
            r.reason = "no NSP starts within T_s";
        }
        else if (!r.window_ok)
        {
            r.reason = "T_m + T_r = " + std::to_string(t_m + t_r) + " ticks does not fit in the NSP of " +
                       std::to_string(nsp_duration) + " ticks";
        }
        else
        {
            r.reason = "ok";
        }
        return r;
    }

    FeasibilityReport validate_feasibility(const Scenario &sc, const nf::NfSchema &schema, Tick t_s)
    {
        const Tick t_m = sc.poll_interval + 2 * message_delay(sc);
        const Tick t_r = effective_t_r(sc);
        if (schema.css_indices.empty())
        {
            // No CSP: the whole flow is one NSP.
            return assess_feasibility(t_m, t_r, 0, kUnbounded, t_s);
        }
        // The shipped CSP-bearing NF (NAT) has a single CSP: the opening SYN.
        const Tick t1 = ticks_from_s(sc.t1_s);
        const Tick syn_at_nf =
            ticks_from_ms(sc.link(Node::H1, Node::S1).delay_ms) + ticks_from_ms(sc.link(Node::S1, Node::NfSrc).delay_ms) +
            sc.service_max;
        const Tick lifetime = estimated_flow_lifetime(sc) + syn_at_nf;
        const Tick nsp_begin = std::max(t1, syn_at_nf);
        const Tick duration = std::max<Tick>(0, lifetime - nsp_begin);
        return assess_feasibility(t_m, t_r, nsp_begin - t1, duration, t_s);
    }
} // namespace flowmig::fms
