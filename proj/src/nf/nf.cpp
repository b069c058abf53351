#include "flowmig/nf/nf.hpp"

#include "builtin.hpp"

#include <algorithm>
#include <iterator>

namespace flowmig::nf
{
    namespace
    {
        bool is_initial(const SubstateValue &v)
        {
            if (const auto *s = std::get_if<std::int64_t>(&v))
            {
                return *s == 0;
            }
            return std::get<std::vector<std::int64_t>>(v).empty();
        }

        std::vector<std::int64_t> set_union(const std::vector<std::int64_t> &a, const std::vector<std::int64_t> &b)
        {
            std::vector<std::int64_t> out;
            out.reserve(a.size() + b.size());
            std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
            return out;
        }

        SubstateValue delta_value(MergeKind merge, const SubstateValue &before, const SubstateValue &after)
        {
            switch (merge)
            {
            case MergeKind::Sum:
                return std::get<std::int64_t>(after) - std::get<std::int64_t>(before);
            case MergeKind::Union:
            {
                const auto &a = std::get<std::vector<std::int64_t>>(after);
                const auto &b = std::get<std::vector<std::int64_t>>(before);
                std::vector<std::int64_t> added;
                std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(added));
                return added;
            }
            case MergeKind::Assign:
            case MergeKind::Max:
                break;
            }
            return after;
        }
    } // namespace

    StepResult NetworkFunction::step(const NFState &q, const Packet &p) const
    {
        Transition t;
        t.values.reserve(q.substates.size());
        for (const Substate &s : q.substates)
        {
            t.values.push_back(s.value);
        }
        transform(q, p, t);

        StepResult r;
        r.output = std::move(t.output);
        r.csp_marker = t.marker;
        r.next_state = q;

        const bool in_csp = t.marker != CspMarker::NotInCSP;
        StateUpdateMessage css{kNone, Node::NfSrc, Node::NfDst, MessageClass::CSS, {}};
        StateUpdateMessage rcss{kNone, Node::NfSrc, Node::NfDst, MessageClass::RCSS, {}};
        StateUpdateMessage nss{kNone, Node::NfSrc, Node::NfDst, MessageClass::NSS, {}};

        for (std::size_t i = 0; i < t.values.size(); ++i)
        {
            if (t.values[i] == q.substates[i].value)
            {
                continue;
            }
            const int index = static_cast<int>(i) + 1;
            r.updated_indices.insert(index);
            Delta d{index, delta_value(schema_.substates[i].merge, q.substates[i].value, t.values[i]), p.admit_ts};
            r.next_state.substates[i] = Substate{std::move(t.values[i]), p.admit_ts};
            if (schema_.is_css(index))
            {
                css.deltas.push_back(std::move(d));
            }
            else if (in_csp)
            {
                rcss.deltas.push_back(std::move(d));
            }
            else
            {
                nss.deltas.push_back(std::move(d));
            }
        }
        if (!r.updated_indices.empty())
        {
            ++r.next_state.version;
            r.next_state.last_update_ts = p.admit_ts;
        }
        for (StateUpdateMessage *m : {&css, &rcss, &nss})
        {
            if (!m->deltas.empty())
            {
                r.messages.push_back(std::move(*m));
            }
        }
        return r;
    }

    NFState NetworkFunction::apply(const NFState &q, const StateUpdateMessage &m) const
    {
        NFState r = q;
        bool changed = false;
        Timestamp newest = q.last_update_ts;

        for (const Delta &d : m.deltas)
        {
            if (d.index < 1 || d.index > schema_.size())
            {
                throw std::out_of_range("delta index " + std::to_string(d.index) + " outside schema " + schema_.name);
            }
            Substate &cur = r.substates[static_cast<std::size_t>(d.index - 1)];
            const SubstateSpec &spec = schema_.substates[static_cast<std::size_t>(d.index - 1)];
            SubstateValue next = cur.value;

            if (m.cls == MessageClass::Full)
            {
                next = d.value;
            }
            else
            {
                switch (spec.merge)
                {
                case MergeKind::Assign:
                    if (cur.value != d.value && schema_.is_css(d.index) && !is_initial(cur.value))
                    {
                        throw ConflictError("CSS substate " + spec.name + " holds " + format_value(cur.value) +
                                            ", delta carries " + format_value(d.value));
                    }
                    next = d.value;
                    break;
                case MergeKind::Max:
                    next = std::max(std::get<std::int64_t>(cur.value), std::get<std::int64_t>(d.value));
                    break;
                case MergeKind::Sum:
                {
                    const DeltaKey key{d.index, d.source_ts};
                    auto it = std::lower_bound(r.applied.begin(), r.applied.end(), key);
                    if (it != r.applied.end() && *it == key)
                    {
                        continue;
                    }
                    r.applied.insert(it, key);
                    next = std::get<std::int64_t>(cur.value) + std::get<std::int64_t>(d.value);
                    break;
                }
                case MergeKind::Union:
                    next = set_union(std::get<std::vector<std::int64_t>>(cur.value),
                                     std::get<std::vector<std::int64_t>>(d.value));
                    break;
                }
            }
            if (next != cur.value)
            {
                cur.value = std::move(next);
                cur.ts = std::max(cur.ts, d.source_ts);
                newest = std::max(newest, d.source_ts);
                changed = true;
            }
        }

        std::vector<SubstateValue> values;
        values.reserve(r.substates.size());
        for (const Substate &s : r.substates)
        {
            values.push_back(s.value);
        }
        normalize(values);
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            if (values[i] != r.substates[i].value)
            {
                r.substates[i].value = std::move(values[i]);
                r.substates[i].ts = std::max(r.substates[i].ts, newest);
                changed = true;
            }
        }

        if (changed)
        {
            ++r.version;
            r.last_update_ts = newest;
        }
        return r;
    }

    StateUpdateMessage NetworkFunction::snapshot(const NFState &q) const
    {
        StateUpdateMessage m{kNone, Node::NfSrc, Node::NfDst, MessageClass::Full, {}};
        for (std::size_t i = 0; i < q.substates.size(); ++i)
        {
            m.deltas.push_back(Delta{static_cast<int>(i) + 1, q.substates[i].value, q.substates[i].ts});
        }
        return m;
    }

    std::vector<StateUpdateMessage> NetworkFunction::split_state(const NFState &q) const
    {
        StateUpdateMessage css{kNone, Node::NfSrc, Node::NfDst, MessageClass::CSS, {}};
        StateUpdateMessage rest{kNone, Node::NfSrc, Node::NfDst, MessageClass::NSS, {}};
        for (std::size_t i = 0; i < q.substates.size(); ++i)
        {
            const int index = static_cast<int>(i) + 1;
            if (is_initial(q.substates[i].value))
            {
                continue;
            }
            Delta d{index, q.substates[i].value, q.substates[i].ts};
            (schema_.is_css(index) ? css : rest).deltas.push_back(std::move(d));
        }
        std::vector<StateUpdateMessage> out;
        if (!css.deltas.empty())
        {
            out.push_back(std::move(css));
        }
        if (!rest.deltas.empty())
        {
            out.push_back(std::move(rest));
        }
        return out;
    }

    NfSchema schema_for(NfKind kind)
    {
        switch (kind)
        {
        case NfKind::Nat:
            return nat_schema();
        case NfKind::Counter:
            return counter_schema();
        case NfKind::Dpi:
            return dpi_schema();
        }
        throw std::invalid_argument("unknown nf kind");
    }

    NfHandle make_nf(const NfConfig &cfg)
    {
        switch (cfg.kind)
        {
        case NfKind::Nat:
            return detail::make_nat(cfg.nat);
        case NfKind::Counter:
            return detail::make_counter();
        case NfKind::Dpi:
            return detail::make_dpi();
        }
        throw std::invalid_argument("unknown nf kind");
    }

    StepResult nf_step(const NfConfig &cfg, const NFState &q, const Packet &p) { return make_nf(cfg)->step(q, p); }

    NFState nf_apply(const NfConfig &cfg, const NFState &q, const StateUpdateMessage &m)
    {
        return make_nf(cfg)->apply(q, m);
    }

    bool same_output(const OutputSeq &a, const OutputSeq &b) noexcept
    {
        if (a.items.size() != b.items.size())
        {
            return false;
        }
        for (std::size_t i = 0; i < a.items.size(); ++i)
        {
            if (!same_header(a.items[i], b.items[i]) || a.items[i].admit_ts != b.items[i].admit_ts)
            {
                return false;
            }
        }
        return true;
    }

    bool step_partial_equiv(const NetworkFunction &f, const Packet &p, const NFState &qa, const NFState &qb,
                            const IndexSet &idx)
    {
        const StepResult ra = f.step(qa, p);
        const StepResult rb = f.step(qb, p);
        return same_output(ra.output, rb.output) && partial_equiv(ra.next_state, rb.next_state, idx);
    }

    bool step_partial_equiv(const NfConfig &cfg, const Packet &p, const NFState &qa, const NFState &qb,
                            const IndexSet &idx)
    {
        return step_partial_equiv(*make_nf(cfg), p, qa, qb, idx);
    }
} // namespace flowmig::nf
