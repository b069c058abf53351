#include "flowmig/checkers/checkers.hpp"

namespace flowmig::checkers
{
    IdealReplay ideal_replay(const nf::NfConfig &cfg, const std::vector<Packet> &input)
    {
        return ideal_replay(cfg, nf::initial_state(nf::schema_for(cfg.kind)), input);
    }

    IdealReplay ideal_replay(const nf::NfConfig &cfg, const nf::NFState &q0, const std::vector<Packet> &input)
    {
        const nf::NfHandle f = nf::make_nf(cfg);
        IdealReplay r;
        r.input = input;
        r.state_seq.reserve(input.size() + 1);
        r.state_seq.push_back(q0);
        for (std::size_t i = 0; i < input.size(); ++i)
        {
            nf::StepResult s = f->step(r.state_seq.back(), input[i]);
            for (Packet &o : s.output.items)
            {
                r.output_seq.push_back(std::move(o));
                r.produced_by.push_back(i);
            }
            r.state_seq.push_back(std::move(s.next_state));
        }
        return r;
    }
} // namespace flowmig::checkers
