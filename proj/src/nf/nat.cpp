#include "builtin.hpp"

#include <algorithm>

namespace flowmig::nf
{
    namespace
    {
        // Substate layout. The four mapping fields form the CSS.
        enum : std::size_t
        {
            kPrivAddr,
            kPrivPort,
            kPubAddr,
            kPubPort,
            kLastSeen,
            kFwdPackets,
            kRevPackets,
            kFinSeen,
        };

        std::int64_t &num(std::vector<SubstateValue> &v, std::size_t i) { return std::get<std::int64_t>(v[i]); }

        class Nat final : public NetworkFunction
        {
        public:
            explicit Nat(NatConfig cfg) : NetworkFunction(nat_schema()), cfg_(std::move(cfg)) {}

        protected:
            void transform(const NFState &, const Packet &p, Transition &t) const override
            {
                auto &v = t.values;
                const bool mapped = num(v, kPubPort) != 0;

                if (p.direction == Direction::Forward)
                {
                    if (!mapped)
                    {
                        if (p.kind != PacketKind::Syn)
                        {
                            return;
                        }
                        const std::int64_t port = allocate();
                        if (port == 0)
                        {
                            return;
                        }
                        num(v, kPrivAddr) = p.flow.src_addr;
                        num(v, kPrivPort) = p.flow.src_port;
                        num(v, kPubAddr) = cfg_.public_addr;
                        num(v, kPubPort) = port;
                        t.marker = CspMarker::EndOfCSP;
                    }
                    else if (num(v, kPrivAddr) != p.flow.src_addr || num(v, kPrivPort) != p.flow.src_port)
                    {
                        return;
                    }
                    Packet out = detail::forwarded(p);
                    out.flow.src_addr = static_cast<std::uint32_t>(num(v, kPubAddr));
                    out.flow.src_port = static_cast<std::uint16_t>(num(v, kPubPort));
                    t.output.items.push_back(out);
                    num(v, kFwdPackets) += 1;
                }
                else
                {
                    if (!mapped || num(v, kPubAddr) != p.flow.dst_addr || num(v, kPubPort) != p.flow.dst_port)
                    {
                        return;
                    }
                    Packet out = detail::forwarded(p);
                    out.flow.dst_addr = static_cast<std::uint32_t>(num(v, kPrivAddr));
                    out.flow.dst_port = static_cast<std::uint16_t>(num(v, kPrivPort));
                    t.output.items.push_back(out);
                    num(v, kRevPackets) += 1;
                }
                num(v, kLastSeen) = std::max(num(v, kLastSeen), p.admit_ts);
                if (p.kind == PacketKind::Fin)
                {
                    num(v, kFinSeen) = 1;
                }
            }

        private:
            std::int64_t allocate() const
            {
                for (std::uint32_t port = cfg_.port_lo; port <= cfg_.port_hi; ++port)
                {
                    if (!cfg_.in_use.contains(static_cast<std::uint16_t>(port)))
                    {
                        return port;
                    }
                }
                return 0;
            }

            NatConfig cfg_;
        };
    } // namespace

    NfSchema nat_schema()
    {
        NfSchema s;
        s.kind = NfKind::Nat;
        s.name = "nat";
        s.substates = {
            {"private_addr", MergeKind::Assign, false}, {"private_port", MergeKind::Assign, false},
            {"public_addr", MergeKind::Assign, false},  {"public_port", MergeKind::Assign, false},
            {"last_seen_ts", MergeKind::Max, false},    {"fwd_packets", MergeKind::Sum, false},
            {"rev_packets", MergeKind::Sum, false},     {"fin_seen", MergeKind::Max, false},
        };
        s.css_indices = {1, 2, 3, 4};
        return s;
    }

    NfHandle detail::make_nat(const NatConfig &cfg) { return std::make_shared<Nat>(cfg); }
} // namespace flowmig::nf
