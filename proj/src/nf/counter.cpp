#include "builtin.hpp"

#include <algorithm>

namespace flowmig::nf
{
    namespace
    {
        class Counter final : public NetworkFunction
        {
        public:
            Counter() : NetworkFunction(counter_schema()) {}

        protected:
            void transform(const NFState &, const Packet &p, Transition &t) const override
            {
                std::get<std::int64_t>(t.values[0]) += 1;
                auto &max_payload = std::get<std::int64_t>(t.values[1]);
                max_payload = std::max<std::int64_t>(max_payload, p.payload_len);
                t.output.items.push_back(detail::forwarded(p));
            }
        };
    } // namespace

    NfSchema counter_schema()
    {
        NfSchema s;
        s.kind = NfKind::Counter;
        s.name = "counter";
        s.substates = {{"packets", MergeKind::Sum, false}, {"max_payload", MergeKind::Max, false}};
        return s;
    }

    NfHandle detail::make_counter() { return std::make_shared<Counter>(); }
} // namespace flowmig::nf
