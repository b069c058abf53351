#pragma once

#include "flowmig/nf/state.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace flowmig::nf
{
    /// A CSS delta disagrees with a CSS value the receiver created itself.
    class ConflictError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Behavioral contract (f, U) of one NF type.
    ///
    /// Implementations only supply transform(); the diff against the input
    /// state, per-class delta messages and versioning are handled here so all
    /// NFs share one message format.
    class NetworkFunction
    {
    public:
        explicit NetworkFunction(NfSchema schema) : schema_(std::move(schema)) {}
        virtual ~NetworkFunction() = default;

        const NfSchema &schema() const noexcept { return schema_; }

        /// f(p, q) = <s, q', m>. Messages are addressed NfSrc -> NfDst.
        StepResult step(const NFState &q, const Packet &p) const;

        /// U(m, q). Idempotent per (index, source_ts); Full messages overwrite.
        NFState apply(const NFState &q, const StateUpdateMessage &m) const;

        /// Rebuild a Full snapshot message carrying every substate of q.
        StateUpdateMessage snapshot(const NFState &q) const;

        /// Delta messages that bring an initial-state instance up to q; one
        /// per class in {CSS, NSS}, either possibly absent.
        std::vector<StateUpdateMessage> split_state(const NFState &q) const;

    protected:
        struct Transition
        {
            std::vector<SubstateValue> values;
            OutputSeq output;
            CspMarker marker = CspMarker::NotInCSP;
        };

        // values arrives as a copy of q's values and is edited in place.
        virtual void transform(const NFState &q, const Packet &p, Transition &t) const = 0;

        // Re-derive dependent substates after a merge (DPI match set).
        virtual void normalize(std::vector<SubstateValue> &) const {}

    private:
        NfSchema schema_;
    };

    using NfHandle = std::shared_ptr<const NetworkFunction>;

    NfSchema nat_schema();
    NfSchema counter_schema();
    NfSchema dpi_schema();
    NfSchema schema_for(NfKind kind);

    NfHandle make_nf(const NfConfig &cfg);

    StepResult nf_step(const NfConfig &cfg, const NFState &q, const Packet &p);
    NFState nf_apply(const NfConfig &cfg, const NFState &q, const StateUpdateMessage &m);

    /// Definition-level check: same outputs and next states partially equivalent at idx.
    bool step_partial_equiv(const NetworkFunction &f, const Packet &p, const NFState &qa, const NFState &qb,
                            const IndexSet &idx);
    bool step_partial_equiv(const NfConfig &cfg, const Packet &p, const NFState &qa, const NFState &qb,
                            const IndexSet &idx);

    /// Outputs compared on everything except packet ids.
    bool same_output(const OutputSeq &a, const OutputSeq &b) noexcept;

    // DPI token hash exposed for tests.
    bool dpi_boundary_matches(std::int64_t left_segment) noexcept;
} // namespace flowmig::nf
