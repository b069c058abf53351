#include "builtin.hpp"

#include <algorithm>

namespace flowmig::nf
{
    namespace
    {
        std::uint64_t mix(std::uint64_t x) noexcept
        {
            x += 0x9e3779b97f4a7c15ull;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
            return x ^ (x >> 31);
        }

        using IntSet = std::vector<std::int64_t>;

        // Substate 2 is a pure function of substate 1, so merges stay commutative.
        IntSet matches_of(const IntSet &fragments)
        {
            IntSet out;
            for (std::size_t i = 0; i + 1 < fragments.size(); ++i)
            {
                if (fragments[i + 1] == fragments[i] + 1 && dpi_boundary_matches(fragments[i]))
                {
                    out.push_back(fragments[i]);
                }
            }
            return out;
        }

        class Dpi final : public NetworkFunction
        {
        public:
            Dpi() : NetworkFunction(dpi_schema()) {}

        protected:
            void transform(const NFState &, const Packet &p, Transition &t) const override
            {
                if (p.direction == Direction::Forward && p.kind == PacketKind::Data && p.payload_len > 0)
                {
                    auto &frags = std::get<IntSet>(t.values[0]);
                    auto it = std::lower_bound(frags.begin(), frags.end(), p.tcp.segment);
                    if (it == frags.end() || *it != p.tcp.segment)
                    {
                        frags.insert(it, p.tcp.segment);
                    }
                    normalize(t.values);
                }
                std::get<std::int64_t>(t.values[2]) += 1;
                t.output.items.push_back(detail::forwarded(p));
            }

            void normalize(std::vector<SubstateValue> &values) const override
            {
                values[1] = matches_of(std::get<IntSet>(values[0]));
            }
        };
    } // namespace

    bool dpi_boundary_matches(std::int64_t left_segment) noexcept
    {
        const auto k = static_cast<std::uint64_t>(left_segment);
        const std::uint64_t tail = mix(2 * k + 1) % 7;
        const std::uint64_t head = mix(2 * (k + 1)) % 7;
        return (tail + head) % 5 == 0;
    }

    NfSchema dpi_schema()
    {
        NfSchema s;
        s.kind = NfKind::Dpi;
        s.name = "dpi";
        s.substates = {
            {"fragments", MergeKind::Union, true},
            {"matches", MergeKind::Union, true},
            {"packets", MergeKind::Sum, false},
        };
        return s;
    }

    NfHandle detail::make_dpi() { return std::make_shared<Dpi>(); }
} // namespace flowmig::nf
