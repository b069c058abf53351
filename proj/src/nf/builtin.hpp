#pragma once

#include "flowmig/nf/nf.hpp"

namespace flowmig::nf::detail
{
    NfHandle make_nat(const NatConfig &cfg);
    NfHandle make_counter();
    NfHandle make_dpi();

    // Output item for an input forwarded with (possibly) rewritten headers.
    inline Packet forwarded(const Packet &p)
    {
        Packet out = p;
        out.id = kNone;
        out.origin = p.id;
        return out;
    }
} // namespace flowmig::nf::detail
