#pragma once

#include "flowmig/core/types.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace flowmig::transport
{
    // Segment-numbered, packet-counted TCP-like model. Segment 0 is the SYN,
    // 1..N carry data and N+1 is the FIN. cum_ack is the next expected segment.

    class ProtocolError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct TcpConfig
    {
        double initial_cwnd = 10;
        double max_cwnd = 1000;
        int dupthresh = 3;
        int max_dupthresh = 300;
        Tick initial_rto = 1'000'000;
        Tick min_rto = 1'000;
        double rto_srtt_multiple = 4.0;

        bool operator==(const TcpConfig &) const = default;
    };

    struct ReceiverState
    {
        std::int64_t cum_ack = 0;
        // Segments above cum_ack held for reassembly.
        std::set<std::int64_t> out_of_order;
        std::int64_t duplicates = 0;
    };

    struct ReceiverOutput
    {
        TransportHeader ack;
        // Segments handed to the application by this arrival, in order.
        std::vector<std::int64_t> delivered;
        bool duplicate = false;
    };

    ReceiverOutput receiver_on_data(ReceiverState &r, std::int64_t segment);

    /// Per-segment sender scoreboard flags.
    enum SegFlag : std::uint8_t
    {
        kSent = 1,
        kSacked = 2,
        kLost = 4,
        kRetransmitted = 8,
        kSpurious = 16,
        kEverRetransmitted = 32,
    };

    struct SenderState
    {
        TcpConfig cfg;
        std::int64_t last_segment = 1; // FIN segment number

        double cwnd = 10;
        double ssthresh = 1e18;
        int dupthresh = 3;
        std::int64_t next_seq = 0;
        std::int64_t snd_una = 0;
        std::int64_t highest_sacked = -1;
        std::int64_t sacked_count = 0;

        std::vector<std::uint8_t> flags;
        std::vector<Tick> sent_at;
        // Reordering extent seen when a segment was first acknowledged.
        std::vector<std::int32_t> extent;

        bool in_recovery = false;
        std::int64_t recovery_point = 0;
        // The fast retransmit that opens a recovery episode ignores the window.
        bool fast_retx_pending = false;
        bool undo_valid = false;
        double saved_cwnd = 0;
        double saved_ssthresh = 0;
        std::int64_t undo_retrans = 0;

        Tick srtt = 0;
        bool have_rtt = false;

        std::int64_t dup_acks = 0;
        std::int64_t retransmit_count = 0;
        std::int64_t spurious_retransmit_count = 0;
        std::int64_t dsacks_received = 0;
        std::int64_t rto_count = 0;
        std::int64_t max_reorder_extent = 0;
    };

    SenderState make_sender(const TcpConfig &cfg, std::int64_t data_segments);

    struct AckOutcome
    {
        bool duplicate = false;
        bool entered_recovery = false;
        std::int64_t newly_lost = 0;
        std::int64_t spurious_detected = 0;
        bool undone = false;
        bool progressed = false;
    };

    /// Throws ProtocolError if the ack covers a segment never sent.
    AckOutcome sender_on_ack(SenderState &s, const TransportHeader &ack, Tick now);

    /// Next segment the window allows: lost segments first, then new data up to
    /// `available` (highest segment the application has produced).
    std::optional<std::int64_t> sender_next_segment(const SenderState &s, std::int64_t available);

    /// Record a (re)transmission. Returns true for a retransmission.
    bool sender_on_send(SenderState &s, std::int64_t segment, Tick now);

    void sender_on_rto(SenderState &s);

    Tick sender_rto(const SenderState &s) noexcept;
    std::int64_t sender_pipe(const SenderState &s) noexcept;
    bool sender_done(const SenderState &s) noexcept;
    bool sender_has_outstanding(const SenderState &s) noexcept;
} // namespace flowmig::transport
