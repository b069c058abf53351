#pragma once

#include "flowmig/core/trace.hpp"

#include <stdexcept>

namespace flowmig::transport
{
    class IncompleteTransferError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Transfer accounting derived from HostSend/HostReceive events only.
    struct TransferStats
    {
        std::int64_t data_bytes = 0;      // distinct application bytes sent
        std::int64_t delivered_bytes = 0; // in-order bytes handed to the receiver application
        std::int64_t received_bytes = 0;  // every data byte arriving at the receiver, duplicates included
        Tick first_data_send = -1;
        Tick last_delivery = -1;
        bool fin_delivered = false; // FIN reached the receiver; with all data delivered it is in order
        std::int64_t data_sends = 0;
        std::int64_t retransmits = 0;
        std::int64_t dsack_acks = 0;
        std::int64_t spurious_detected = 0;

        bool complete() const noexcept { return fin_delivered && delivered_bytes == data_bytes; }
    };

    TransferStats transfer_stats(const Trace &t);

    /// Unique bytes delivered per second of transfer, in bits/s.
    /// Throws IncompleteTransferError carrying the delivered/sent byte counts.
    double compute_goodput(const Trace &t);
    double goodput_bps(const TransferStats &s);
} // namespace flowmig::transport
