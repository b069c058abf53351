#pragma once

#include "flowmig/core/trace.hpp"
#include "flowmig/nf/nf.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowmig::checkers
{
    /// Ideal NF: every input processed in order from one state, no drop, buffer or reorder.
    struct IdealReplay
    {
        std::vector<Packet> input;
        // state_seq[0] is the starting state, state_seq[k] the state after input[k-1].
        std::vector<nf::NFState> state_seq;
        std::vector<Packet> output_seq;
        // Index into input of the packet that produced each output.
        std::vector<std::size_t> produced_by;
    };

    IdealReplay ideal_replay(const nf::NfConfig &cfg, const std::vector<Packet> &input);
    IdealReplay ideal_replay(const nf::NfConfig &cfg, const nf::NFState &q0, const std::vector<Packet> &input);

    enum class Property : std::uint8_t
    {
        L,
        N,
        O,
        SO,
        E,
        EventualSync,
        WeakO_R1,
        WeakO_R2,
    };

    inline constexpr std::array<Property, 8> kAllProperties = {
        Property::L, Property::N, Property::O, Property::SO,
        Property::E, Property::WeakO_R1, Property::WeakO_R2, Property::EventualSync,
    };

    std::string_view to_string(Property p) noexcept;
    Property property_from(std::string_view s);

    struct Verdict
    {
        Property property = Property::L;
        bool pass = true;
        // Event indices, smallest witness first. Nonempty whenever pass is false.
        std::vector<std::size_t> counterexample;
        std::string explanation;
    };

    Verdict check_L(const Trace &t);
    Verdict check_N(const Trace &t);
    Verdict check_O(const Trace &t);
    Verdict check_SO(const Trace &t);
    Verdict check_E(const Trace &t);
    Verdict check_eventual_sync(const Trace &t);

    struct WeakOVerdict
    {
        Verdict r1;
        Verdict r2;
    };

    WeakOVerdict check_weak_o(const Trace &t);

    /// Every property, in kAllProperties order.
    std::vector<Verdict> check_all(const Trace &t);

    // ---- CSP oracle ----

    class OracleSizeError : public std::length_error
    {
    public:
        using std::length_error::length_error;
    };

    /// Packets [begin, end) of a flow (0-based) and the substates they must synchronize.
    struct CspRange
    {
        std::size_t begin = 0;
        std::size_t end = 0;
        nf::IndexSet css;

        bool operator==(const CspRange &) const = default;
    };

    inline constexpr std::size_t kOracleCap = 12;

    /// Brute force over contiguous ranges of a flow processed from the initial state.
    /// Throws OracleSizeError when the flow is longer than cap.
    std::vector<CspRange> detect_csp_oracle(const nf::NfConfig &cfg, const std::vector<Packet> &flow,
                                            std::size_t cap = kOracleCap);

    /// Ranges the NF itself marks (InCSP ... EndOfCSP) on the same flow.
    std::vector<CspRange> declared_csp_ranges(const nf::NfConfig &cfg, const std::vector<Packet> &flow);

    // ---- reordering ----

    struct ReorderMetrics
    {
        std::int64_t max_displacement = 0;
        std::int64_t displaced_count = 0;
    };

    /// Displacement = exit_index - admit_rank, per direction over ExitFMS packets.
    /// displaced_count counts packets with positive displacement.
    ReorderMetrics reorder_metrics(const Trace &t);
    ReorderMetrics reorder_metrics(const std::vector<Timestamp> &exit_order_admit_ts);
} // namespace flowmig::checkers
