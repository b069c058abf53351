#include "flowmig/transport/tcp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowmig::transport
{
    namespace
    {
        // Count kept in SenderState::extent is clipped to fit.
        constexpr std::int64_t kExtentCap = 1 << 30;

        std::int64_t lost_pending(const SenderState &s)
        {
            std::int64_t n = 0;
            for (std::int64_t seg = s.snd_una; seg < s.next_seq; ++seg)
            {
                const std::uint8_t f = s.flags[static_cast<std::size_t>(seg)];
                if ((f & kLost) && !(f & kRetransmitted) && !(f & kSacked))
                {
                    ++n;
                }
            }
            return n;
        }

        void raise_dupthresh(SenderState &s, std::int64_t extent)
        {
            s.max_reorder_extent = std::max(s.max_reorder_extent, extent);
            const std::int64_t want = std::min<std::int64_t>(extent + 1, s.cfg.max_dupthresh);
            s.dupthresh = static_cast<int>(std::max<std::int64_t>(s.dupthresh, want));
        }

        // First acknowledgement of seg (cumulative or selective).
        void note_first_ack(SenderState &s, std::int64_t seg)
        {
            const auto i = static_cast<std::size_t>(seg);
            const std::int64_t extent = seg < s.highest_sacked ? s.highest_sacked - seg : 0;
            s.extent[i] = static_cast<std::int32_t>(std::min(extent, kExtentCap));
            if (extent > 0 && !(s.flags[i] & kEverRetransmitted))
            {
                // Hole filled without a retransmission: pure reordering.
                raise_dupthresh(s, extent);
            }
        }
    } // namespace

    ReceiverOutput receiver_on_data(ReceiverState &r, std::int64_t segment)
    {
        ReceiverOutput out;
        if (segment < r.cum_ack || r.out_of_order.contains(segment))
        {
            out.duplicate = true;
            ++r.duplicates;
            out.ack.has_dsack = true;
            out.ack.dsack = SackBlock{segment, segment};
        }
        else if (segment == r.cum_ack)
        {
            out.delivered.push_back(segment);
            ++r.cum_ack;
            while (!r.out_of_order.empty() && *r.out_of_order.begin() == r.cum_ack)
            {
                out.delivered.push_back(r.cum_ack);
                r.out_of_order.erase(r.out_of_order.begin());
                ++r.cum_ack;
            }
        }
        else
        {
            r.out_of_order.insert(segment);
        }
        out.ack.cum_ack = r.cum_ack;
        out.ack.segment = segment;

        // Contiguous runs above cum_ack, highest first.
        std::vector<SackBlock> runs;
        for (auto it = r.out_of_order.rbegin(); it != r.out_of_order.rend(); ++it)
        {
            if (!runs.empty() && runs.back().start == *it + 1)
            {
                runs.back().start = *it;
            }
            else
            {
                runs.push_back(SackBlock{*it, *it});
            }
        }
        // The run holding the segment just received goes first.
        auto first = std::find_if(runs.begin(), runs.end(),
                                  [segment](const SackBlock &b) { return b.start <= segment && segment <= b.end; });
        if (first != runs.end())
        {
            std::rotate(runs.begin(), first, first + 1);
        }
        for (const SackBlock &b : runs)
        {
            if (out.ack.sack_count == out.ack.sack.size())
            {
                break;
            }
            out.ack.sack[out.ack.sack_count++] = b;
        }
        return out;
    }

    SenderState make_sender(const TcpConfig &cfg, std::int64_t data_segments)
    {
        SenderState s;
        s.cfg = cfg;
        s.last_segment = data_segments + 1;
        s.cwnd = cfg.initial_cwnd;
        s.dupthresh = cfg.dupthresh;
        const auto n = static_cast<std::size_t>(s.last_segment + 1);
        s.flags.assign(n, 0);
        s.sent_at.assign(n, 0);
        s.extent.assign(n, 0);
        return s;
    }

    std::int64_t sender_pipe(const SenderState &s) noexcept
    {
        std::int64_t pipe = s.next_seq - s.snd_una - s.sacked_count;
        if (s.in_recovery)
        {
            pipe -= lost_pending(s);
        }
        return std::max<std::int64_t>(pipe, 0);
    }

    std::optional<std::int64_t> sender_next_segment(const SenderState &s, std::int64_t available)
    {
        if (s.next_seq == 0)
        {
            return 0;
        }
        if (s.snd_una == 0)
        {
            // Handshake pending: only the SYN may go out.
            if ((s.flags[0] & kLost) && !(s.flags[0] & kRetransmitted))
            {
                return 0;
            }
            return std::nullopt;
        }
        if (sender_done(s))
        {
            return std::nullopt;
        }
        if (s.fast_retx_pending)
        {
            for (std::int64_t seg = s.snd_una; seg < s.next_seq; ++seg)
            {
                const std::uint8_t f = s.flags[static_cast<std::size_t>(seg)];
                if ((f & kLost) && !(f & kRetransmitted) && !(f & kSacked))
                {
                    return seg;
                }
            }
        }
        const auto window = static_cast<std::int64_t>(std::max(1.0, std::floor(s.cwnd)));
        if (sender_pipe(s) >= window)
        {
            return std::nullopt;
        }
        if (s.in_recovery)
        {
            for (std::int64_t seg = s.snd_una; seg < s.next_seq; ++seg)
            {
                const std::uint8_t f = s.flags[static_cast<std::size_t>(seg)];
                if ((f & kLost) && !(f & kRetransmitted) && !(f & kSacked))
                {
                    return seg;
                }
            }
        }
        const std::int64_t data = s.last_segment - 1;
        if (s.next_seq <= s.last_segment && (s.next_seq <= available || (s.next_seq == s.last_segment && available >= data)))
        {
            return s.next_seq;
        }
        return std::nullopt;
    }

    bool sender_on_send(SenderState &s, std::int64_t segment, Tick now)
    {
        if (segment < 0 || segment > s.last_segment)
        {
            throw ProtocolError("send of segment " + std::to_string(segment) + " outside flow");
        }
        std::uint8_t &f = s.flags[static_cast<std::size_t>(segment)];
        const bool retx = f & kSent;
        f |= kSent;
        if (retx)
        {
            s.fast_retx_pending = false;
            f |= kRetransmitted | kEverRetransmitted;
            ++s.retransmit_count;
            if (s.undo_valid)
            {
                ++s.undo_retrans;
            }
        }
        s.sent_at[static_cast<std::size_t>(segment)] = now;
        if (segment == s.next_seq)
        {
            ++s.next_seq;
        }
        return retx;
    }

    AckOutcome sender_on_ack(SenderState &s, const TransportHeader &ack, Tick now)
    {
        if (ack.cum_ack > s.next_seq)
        {
            throw ProtocolError("ack " + std::to_string(ack.cum_ack) + " beyond next_seq " + std::to_string(s.next_seq));
        }
        for (std::uint8_t i = 0; i < ack.sack_count; ++i)
        {
            if (ack.sack[i].end >= s.next_seq || ack.sack[i].start > ack.sack[i].end)
            {
                throw ProtocolError("SACK block beyond next_seq");
            }
        }

        AckOutcome out;

        if (ack.has_dsack)
        {
            ++s.dsacks_received;
            for (std::int64_t seg = ack.dsack.start; seg <= ack.dsack.end && seg <= s.last_segment; ++seg)
            {
                std::uint8_t &f = s.flags[static_cast<std::size_t>(seg)];
                if (!(f & kEverRetransmitted) || (f & kSpurious))
                {
                    continue;
                }
                f |= kSpurious;
                ++s.spurious_retransmit_count;
                ++out.spurious_detected;
                raise_dupthresh(s, s.extent[static_cast<std::size_t>(seg)]);
                if (s.undo_valid && --s.undo_retrans <= 0)
                {
                    // Every retransmission of the episode was unnecessary.
                    s.cwnd = std::max(s.cwnd, s.saved_cwnd);
                    s.ssthresh = std::max(s.ssthresh, s.saved_ssthresh);
                    s.in_recovery = false;
                    s.undo_valid = false;
                    s.fast_retx_pending = false;
                    out.undone = true;
                }
            }
        }

        if (ack.cum_ack > s.snd_una)
        {
            const std::int64_t old_una = s.snd_una;
            for (std::int64_t seg = old_una; seg < ack.cum_ack; ++seg)
            {
                std::uint8_t &f = s.flags[static_cast<std::size_t>(seg)];
                if (f & kSacked)
                {
                    --s.sacked_count;
                }
                else
                {
                    note_first_ack(s, seg);
                }
                f &= static_cast<std::uint8_t>(~kLost);
            }
            const std::int64_t last = ack.cum_ack - 1;
            if (!(s.flags[static_cast<std::size_t>(last)] & kEverRetransmitted))
            {
                const Tick sample = now - s.sent_at[static_cast<std::size_t>(last)];
                s.srtt = s.have_rtt ? (7 * s.srtt + sample) / 8 : sample;
                s.have_rtt = true;
            }
            s.snd_una = ack.cum_ack;
            out.progressed = true;
            const double newly = static_cast<double>(ack.cum_ack - old_una);
            if (s.in_recovery && s.snd_una > s.recovery_point)
            {
                s.in_recovery = false;
                s.fast_retx_pending = false;
            }
            if (!s.in_recovery && old_una > 0)
            {
                s.cwnd += s.cwnd < s.ssthresh ? newly : newly / s.cwnd;
                s.cwnd = std::min(s.cwnd, s.cfg.max_cwnd);
            }
        }
        else if (s.snd_una < s.next_seq)
        {
            out.duplicate = true;
            ++s.dup_acks;
        }

        for (std::uint8_t i = 0; i < ack.sack_count; ++i)
        {
            for (std::int64_t seg = std::max(ack.sack[i].start, s.snd_una); seg <= ack.sack[i].end; ++seg)
            {
                std::uint8_t &f = s.flags[static_cast<std::size_t>(seg)];
                if (f & kSacked)
                {
                    continue;
                }
                note_first_ack(s, seg);
                f |= kSacked;
                f &= static_cast<std::uint8_t>(~kLost);
                ++s.sacked_count;
                s.highest_sacked = std::max(s.highest_sacked, seg);
            }
        }

        if (s.sacked_count > 0)
        {
            // A hole is lost once dupthresh segments above it are SACKed.
            std::int64_t below = 0;
            for (std::int64_t seg = s.snd_una; seg < s.highest_sacked; ++seg)
            {
                std::uint8_t &f = s.flags[static_cast<std::size_t>(seg)];
                if (f & kSacked)
                {
                    ++below;
                    continue;
                }
                if (s.sacked_count - below < s.dupthresh)
                {
                    break;
                }
                if (!(f & kLost))
                {
                    f |= kLost;
                    f &= static_cast<std::uint8_t>(~kRetransmitted);
                    ++out.newly_lost;
                }
            }
        }

        if (out.newly_lost > 0 && !s.in_recovery)
        {
            s.undo_valid = true;
            s.saved_cwnd = s.cwnd;
            s.saved_ssthresh = s.ssthresh;
            s.undo_retrans = 0;
            s.ssthresh = std::max(s.cwnd / 2, 2.0);
            s.cwnd = s.ssthresh;
            s.recovery_point = s.next_seq - 1;
            s.in_recovery = true;
            s.fast_retx_pending = true;
            out.entered_recovery = true;
        }
        return out;
    }

    void sender_on_rto(SenderState &s)
    {
        ++s.rto_count;
        const std::int64_t pipe = sender_pipe(s);
        for (std::int64_t seg = s.snd_una; seg < s.next_seq; ++seg)
        {
            std::uint8_t &f = s.flags[static_cast<std::size_t>(seg)];
            if (!(f & kSacked))
            {
                f |= kLost;
                f &= static_cast<std::uint8_t>(~kRetransmitted);
            }
        }
        s.ssthresh = std::max(static_cast<double>(pipe) / 2, 2.0);
        s.cwnd = 1;
        s.in_recovery = true;
        s.recovery_point = s.next_seq - 1;
        s.undo_valid = false;
        s.fast_retx_pending = false;
    }

    Tick sender_rto(const SenderState &s) noexcept
    {
        if (!s.have_rtt)
        {
            return s.cfg.initial_rto;
        }
        const auto rto = static_cast<Tick>(s.cfg.rto_srtt_multiple * static_cast<double>(s.srtt));
        return std::max(rto, s.cfg.min_rto);
    }

    bool sender_done(const SenderState &s) noexcept { return s.snd_una > s.last_segment; }

    bool sender_has_outstanding(const SenderState &s) noexcept { return s.next_seq > s.snd_una && !sender_done(s); }
} // namespace flowmig::transport
