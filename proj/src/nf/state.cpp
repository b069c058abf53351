#include "flowmig/nf/state.hpp"

#include <array>
#include <stdexcept>

namespace flowmig::nf
{
    namespace
    {
        constexpr std::array<std::string_view, 3> kNfKinds{"nat", "counter", "dpi"};
        constexpr std::array<std::string_view, 4> kClasses{"CSS", "RCSS", "NSS", "Full"};
    } // namespace

    std::string format_value(const SubstateValue &v)
    {
        if (const auto *s = std::get_if<std::int64_t>(&v))
        {
            return std::to_string(*s);
        }
        std::string out = "{";
        const auto &xs = std::get<std::vector<std::int64_t>>(v);
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            if (i)
            {
                out += ',';
            }
            out += std::to_string(xs[i]);
        }
        return out + "}";
    }

    std::int64_t NFState::scalar(int index) const { return std::get<std::int64_t>(at(index)); }

    const std::vector<std::int64_t> &NFState::set(int index) const
    {
        return std::get<std::vector<std::int64_t>>(at(index));
    }

    bool same_substates(const NFState &a, const NFState &b) noexcept
    {
        if (a.substates.size() != b.substates.size())
        {
            return false;
        }
        for (std::size_t i = 0; i < a.substates.size(); ++i)
        {
            if (a.substates[i].value != b.substates[i].value)
            {
                return false;
            }
        }
        return true;
    }

    bool partial_equiv(const NFState &qb, const NFState &qc, const IndexSet &idx)
    {
        for (int i : idx)
        {
            if (i < 1 || i > static_cast<int>(qb.substates.size()) || i > static_cast<int>(qc.substates.size()))
            {
                throw std::out_of_range("substate index " + std::to_string(i) + " outside schema");
            }
            if (qb.at(i) != qc.at(i))
            {
                return false;
            }
        }
        return true;
    }

    NFState initial_state(const NfSchema &schema)
    {
        NFState q;
        q.substates.reserve(schema.substates.size());
        for (const SubstateSpec &s : schema.substates)
        {
            Substate sub;
            if (s.is_set)
            {
                sub.value = std::vector<std::int64_t>{};
            }
            else
            {
                sub.value = std::int64_t{0};
            }
            q.substates.push_back(std::move(sub));
        }
        return q;
    }

    std::string_view to_string(NfKind k) noexcept { return kNfKinds[static_cast<std::size_t>(k)]; }

    NfKind nf_kind_from(std::string_view s)
    {
        for (std::size_t i = 0; i < kNfKinds.size(); ++i)
        {
            if (kNfKinds[i] == s)
            {
                return static_cast<NfKind>(i);
            }
        }
        throw std::invalid_argument("unknown nf kind '" + std::string(s) + "'");
    }

    std::string_view to_string(MessageClass c) noexcept { return kClasses[static_cast<std::size_t>(c)]; }

    MessageClass message_class_from(std::string_view s)
    {
        for (std::size_t i = 0; i < kClasses.size(); ++i)
        {
            if (kClasses[i] == s)
            {
                return static_cast<MessageClass>(i);
            }
        }
        throw std::invalid_argument("unknown message class '" + std::string(s) + "'");
    }
} // namespace flowmig::nf
