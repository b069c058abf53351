#pragma once

#include "flowmig/fms/scenario.hpp"

#include <limits>
#include <string>

namespace flowmig::fms
{
    inline constexpr Tick kUnbounded = std::numeric_limits<Tick>::max() / 4;

    struct FeasibilityReport
    {
        Tick t_m = 0;              // CSS transfer: one poll plus send and acknowledgement
        Tick t_r = 0;              // re-route timer
        Tick t_s = 0;              // latest tolerated delay of the migration start
        Tick nsp_start_delay = 0;  // from t1 to the start of the next NSP
        Tick nsp_duration = 0;     // length of that NSP (kUnbounded if it lasts the flow)
        bool nsp_within_ts = false;
        bool window_ok = false;
        bool feasible = false;
        std::string reason;
    };

    /// Direct check of the two no-buffer conditions.
    FeasibilityReport assess_feasibility(Tick t_m, Tick t_r, Tick nsp_start_delay, Tick nsp_duration, Tick t_s);

    /// Estimates the quantities from the scenario and NF schema. Advisory only.
    FeasibilityReport validate_feasibility(const Scenario &sc, const nf::NfSchema &schema,
                                           Tick t_s = 1'000'000);
} // namespace flowmig::fms
