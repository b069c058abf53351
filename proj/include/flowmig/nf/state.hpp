#pragma once

#include "flowmig/core/types.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace flowmig::nf
{
    /// Either a scalar or a sorted set of integers.
    using SubstateValue = std::variant<std::int64_t, std::vector<std::int64_t>>;

    /// 1-based substate indices, as in the NF schema.
    using IndexSet = std::set<int>;

    std::string format_value(const SubstateValue &v);

    // How updates to one substate combine. Every kind except Assign on a CSS
    // index is commutative; Sum is made idempotent by the per-state applied log.
    enum class MergeKind : std::uint8_t
    {
        Assign,
        Max,
        Sum,
        Union,
    };

    struct NatConfig
    {
        std::uint32_t public_addr = 0xCB007101; // 203.0.113.1
        std::uint16_t port_lo = 20000;
        std::uint16_t port_hi = 20999;
        // Ports held by other flows; allocation skips them.
        std::set<std::uint16_t> in_use;

        bool operator==(const NatConfig &) const = default;
    };

    struct SubstateSpec
    {
        std::string name;
        MergeKind merge = MergeKind::Assign;
        bool is_set = false;
    };

    enum class NfKind : std::uint8_t
    {
        Nat,
        Counter,
        Dpi,
    };

    std::string_view to_string(NfKind k) noexcept;
    NfKind nf_kind_from(std::string_view s);

    struct NfConfig
    {
        NfKind kind = NfKind::Nat;
        NatConfig nat;

        bool operator==(const NfConfig &) const = default;
    };

    /// NF schema descriptor. css_indices is the segregation map: the complement is RCSS/NSS.
    struct NfSchema
    {
        NfKind kind = NfKind::Nat;
        std::string name;
        std::vector<SubstateSpec> substates;
        IndexSet css_indices;
        // Buffering DPI variants need in-order input; none of the shipped NFs do.
        bool requires_order = false;

        int size() const noexcept { return static_cast<int>(substates.size()); }
        bool is_css(int index) const { return css_indices.contains(index); }
    };

    struct Substate
    {
        SubstateValue value;
        // Timestamp of the packet whose processing last changed this substate.
        Timestamp ts = kNoTimestamp;
    };

    struct DeltaKey
    {
        int index = 0;
        Timestamp source_ts = kNoTimestamp;

        auto operator<=>(const DeltaKey &) const = default;
    };

    struct NFState
    {
        std::vector<Substate> substates;
        std::uint64_t version = 0;
        Timestamp last_update_ts = kNoTimestamp;
        // Sum deltas already folded in; only populated at a message receiver.
        std::vector<DeltaKey> applied;

        const SubstateValue &at(int index) const { return substates.at(static_cast<std::size_t>(index - 1)).value; }
        std::int64_t scalar(int index) const;
        const std::vector<std::int64_t> &set(int index) const;
    };

    /// Value equality over all substates; version, timestamps and the applied log are ignored.
    bool same_substates(const NFState &a, const NFState &b) noexcept;

    /// True iff the substate values at every index in idx are equal.
    bool partial_equiv(const NFState &qb, const NFState &qc, const IndexSet &idx);

    NFState initial_state(const NfSchema &schema);

    enum class MessageClass : std::uint8_t
    {
        CSS,
        RCSS,
        NSS,
        // Whole-state copy used by the buffering and freezing baselines.
        Full,
    };

    std::string_view to_string(MessageClass c) noexcept;
    MessageClass message_class_from(std::string_view s);

    struct Delta
    {
        int index = 0;
        SubstateValue value;
        Timestamp source_ts = kNoTimestamp;

        bool operator==(const Delta &) const = default;
    };

    struct StateUpdateMessage
    {
        std::int64_t id = kNone;
        Node sender = Node::NfSrc;
        Node target = Node::NfDst;
        MessageClass cls = MessageClass::NSS;
        std::vector<Delta> deltas;

        bool operator==(const StateUpdateMessage &) const = default;
    };

    struct StepResult
    {
        OutputSeq output;
        NFState next_state;
        // At most one message per class; an empty list is the no-message case.
        std::vector<StateUpdateMessage> messages;
        IndexSet updated_indices;
        CspMarker csp_marker = CspMarker::NotInCSP;
    };
} // namespace flowmig::nf
