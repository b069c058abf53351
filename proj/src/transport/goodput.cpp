#include "flowmig/transport/goodput.hpp"

#include <map>
#include <string>

namespace flowmig::transport
{
    TransferStats transfer_stats(const Trace &t)
    {
        TransferStats s;
        std::map<std::int64_t, std::uint32_t> segment_bytes;
        for (const Event &e : t.events)
        {
            if (e.packet == kNone)
            {
                continue;
            }
            const Packet &p = t.packet(e.packet);
            if (e.kind == EventKind::HostSend && e.site == Node::H1 && p.kind == PacketKind::Data)
            {
                ++s.data_sends;
                if (s.first_data_send < 0)
                {
                    s.first_data_send = e.time;
                }
                if (p.tcp.retransmission)
                {
                    ++s.retransmits;
                }
                segment_bytes.emplace(p.tcp.segment, p.payload_len);
            }
            else if (e.kind == EventKind::HostSend && e.site == Node::H1 && p.tcp.retransmission)
            {
                ++s.retransmits;
            }
            else if (e.kind == EventKind::HostReceive && e.site == Node::H2)
            {
                s.received_bytes += p.payload_len;
                if (e.aux > 0)
                {
                    s.delivered_bytes += e.aux;
                    s.last_delivery = e.time;
                }
                if (p.kind == PacketKind::Fin)
                {
                    s.fin_delivered = true;
                }
            }
            else if (e.kind == EventKind::HostReceive && e.site == Node::H1)
            {
                if (p.tcp.has_dsack)
                {
                    ++s.dsack_acks;
                }
                s.spurious_detected += e.aux;
            }
        }
        for (const auto &[seg, bytes] : segment_bytes)
        {
            s.data_bytes += bytes;
        }
        return s;
    }

    double goodput_bps(const TransferStats &s)
    {
        if (!s.complete())
        {
            throw IncompleteTransferError("incomplete transfer: delivered " + std::to_string(s.delivered_bytes) +
                                          " of " + std::to_string(s.data_bytes) + " bytes sent" +
                                          (s.fin_delivered ? "" : ", FIN not delivered"));
        }
        const Tick span = s.last_delivery - s.first_data_send;
        if (span <= 0)
        {
            throw IncompleteTransferError("no data transferred");
        }
        return static_cast<double>(s.delivered_bytes) * 8.0 / seconds_from_ticks(span);
    }

    double compute_goodput(const Trace &t) { return goodput_bps(transfer_stats(t)); }
} // namespace flowmig::transport
