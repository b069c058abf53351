#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowmig
{
    /// Simulation time in microseconds.
    using Tick = std::int64_t;

    /// Logical admission timestamp handed out by the Action Manager.
    using Timestamp = std::int64_t;

    inline constexpr Timestamp kNoTimestamp = -1;
    inline constexpr std::int64_t kNone = -1;

    inline constexpr Tick ticks_from_ms(double ms) noexcept { return static_cast<Tick>(ms * 1000.0 + 0.5); }
    inline constexpr Tick ticks_from_s(double s) noexcept { return static_cast<Tick>(s * 1e6 + 0.5); }
    inline constexpr double seconds_from_ticks(Tick t) noexcept { return static_cast<double>(t) / 1e6; }

    class MalformedTraceError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct FlowKey
    {
        std::uint32_t src_addr = 0;
        std::uint32_t dst_addr = 0;
        std::uint16_t src_port = 0;
        std::uint16_t dst_port = 0;
        std::uint8_t protocol = 6;

        auto operator<=>(const FlowKey &) const = default;
    };

    std::string format_addr(std::uint32_t addr);
    std::uint32_t parse_addr(std::string_view dotted);

    enum class PacketKind : std::uint8_t
    {
        Syn,
        Data,
        Fin,
        Ack,
    };

    enum class Direction : std::uint8_t
    {
        Forward,
        Reverse,
    };

    // Segment ranges are inclusive and counted in segments, not bytes.
    struct SackBlock
    {
        std::int64_t start = 0;
        std::int64_t end = 0;

        auto operator<=>(const SackBlock &) const = default;
    };

    struct TransportHeader
    {
        std::int64_t segment = 0;
        bool retransmission = false;
        std::int64_t cum_ack = 0;
        std::array<SackBlock, 3> sack{};
        std::uint8_t sack_count = 0;
        bool has_dsack = false;
        SackBlock dsack{};

        bool operator==(const TransportHeader &) const = default;
    };

    struct Packet
    {
        std::int64_t id = kNone;
        FlowKey flow{};
        std::int64_t seq_id = 0;
        Timestamp admit_ts = kNoTimestamp;
        PacketKind kind = PacketKind::Data;
        std::uint32_t payload_len = 0;
        Direction direction = Direction::Forward;
        TransportHeader tcp{};
        // For NF outputs: id of the input packet that produced this one.
        std::int64_t origin = kNone;
    };

    /// Header-level equality: everything an observer downstream of the FMS can see.
    bool same_header(const Packet &a, const Packet &b) noexcept;
    std::uint64_t header_digest(const Packet &p) noexcept;

    /// Zero or more packets produced for one input; empty means no packet was output.
    struct OutputSeq
    {
        std::vector<Packet> items;

        bool empty() const noexcept { return items.empty(); }
    };

    enum class Node : std::uint8_t
    {
        H1,
        S1,
        NfSrc,
        NfDst,
        S2,
        H2,
        Smm,
        Controller,
    };

    enum class Route : std::uint8_t
    {
        None,
        Src,
        Dst,
    };

    enum class CspMarker : std::uint8_t
    {
        NotInCSP,
        InCSP,
        EndOfCSP,
    };

    enum class EventKind : std::uint8_t
    {
        Admit,
        RouteDecision,
        NFProcess,
        NFStateChange,
        MsgSend,
        MsgApply,
        Buffer,
        Drop,
        Reroute,
        MigrationStart,
        MigrationEnd,
        ExitFMS,
        HostSend,
        HostReceive,
    };

    std::string_view to_string(PacketKind k) noexcept;
    std::string_view to_string(Direction d) noexcept;
    std::string_view to_string(Node n) noexcept;
    std::string_view to_string(Route r) noexcept;
    std::string_view to_string(CspMarker m) noexcept;
    std::string_view to_string(EventKind k) noexcept;

    PacketKind packet_kind_from(std::string_view s);
    Direction direction_from(std::string_view s);
    Node node_from(std::string_view s);
    Route route_from(std::string_view s);
    CspMarker csp_marker_from(std::string_view s);
    EventKind event_kind_from(std::string_view s);

    /// One trace record. Subjects are ids into the owning Trace's tables.
    struct Event
    {
        Tick time = 0;
        EventKind kind = EventKind::Admit;
        Node site = Node::S1;
        std::int64_t packet = kNone;
        std::int64_t output_begin = 0;
        std::int32_t output_count = 0;
        std::int64_t message = kNone;
        std::int64_t state_before = kNone;
        std::int64_t state_after = kNone;
        Route route = Route::None;
        CspMarker marker = CspMarker::NotInCSP;
        // Kind-specific counter: packets in flight on the old path for Reroute,
        // released packet count for a buffer flush.
        std::int64_t aux = 0;

        bool operator==(const Event &) const = default;
    };
} // namespace flowmig
