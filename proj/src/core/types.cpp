#include "flowmig/core/trace.hpp"
#include "flowmig/core/types.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <string>

namespace flowmig
{
    namespace
    {
        template <typename E, std::size_t N>
        E parse_enum(std::string_view s, const std::array<std::string_view, N> &names, const char *what)
        {
            for (std::size_t i = 0; i < N; ++i)
            {
                if (names[i] == s)
                {
                    return static_cast<E>(i);
                }
            }
            throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
        }

        constexpr std::array<std::string_view, 4> kPacketKinds{"SYN", "DATA", "FIN", "ACK"};
        constexpr std::array<std::string_view, 2> kDirections{"forward", "reverse"};
        constexpr std::array<std::string_view, 8> kNodes{"h1", "s1", "nf_src", "nf_dst", "s2", "h2", "smm", "controller"};
        constexpr std::array<std::string_view, 3> kRoutes{"none", "src", "dst"};
        constexpr std::array<std::string_view, 3> kMarkers{"NotInCSP", "InCSP", "EndOfCSP"};
        constexpr std::array<std::string_view, 14> kEventKinds{
            "Admit", "RouteDecision", "NFProcess", "NFStateChange", "MsgSend", "MsgApply", "Buffer",
            "Drop", "Reroute", "MigrationStart", "MigrationEnd", "ExitFMS", "HostSend", "HostReceive"};

        struct Fnv
        {
            std::uint64_t h = 0xcbf29ce484222325ull;

            void mix(std::uint64_t v) noexcept
            {
                for (int i = 0; i < 8; ++i)
                {
                    h ^= (v >> (8 * i)) & 0xffu;
                    h *= 0x00000100000001b3ull;
                }
            }
        };
    } // namespace

    std::string format_addr(std::uint32_t addr)
    {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (addr >> 24) & 0xffu, (addr >> 16) & 0xffu, (addr >> 8) & 0xffu,
                      addr & 0xffu);
        return buf;
    }

    std::uint32_t parse_addr(std::string_view dotted)
    {
        std::uint32_t out = 0;
        int parts = 0;
        const char *p = dotted.data();
        const char *end = dotted.data() + dotted.size();
        while (p < end && parts < 4)
        {
            unsigned octet = 0;
            auto [next, ec] = std::from_chars(p, end, octet);
            if (ec != std::errc{} || octet > 255)
            {
                break;
            }
            out = (out << 8) | octet;
            ++parts;
            p = next;
            if (p < end && *p == '.')
            {
                ++p;
            }
        }
        if (parts != 4 || p != end)
        {
            throw std::invalid_argument("bad IPv4 address '" + std::string(dotted) + "'");
        }
        return out;
    }

    std::string_view to_string(PacketKind k) noexcept { return kPacketKinds[static_cast<std::size_t>(k)]; }
    std::string_view to_string(Direction d) noexcept { return kDirections[static_cast<std::size_t>(d)]; }
    std::string_view to_string(Node n) noexcept { return kNodes[static_cast<std::size_t>(n)]; }
    std::string_view to_string(Route r) noexcept { return kRoutes[static_cast<std::size_t>(r)]; }
    std::string_view to_string(CspMarker m) noexcept { return kMarkers[static_cast<std::size_t>(m)]; }
    std::string_view to_string(EventKind k) noexcept { return kEventKinds[static_cast<std::size_t>(k)]; }

    PacketKind packet_kind_from(std::string_view s) { return parse_enum<PacketKind>(s, kPacketKinds, "packet kind"); }
    Direction direction_from(std::string_view s) { return parse_enum<Direction>(s, kDirections, "direction"); }
    Node node_from(std::string_view s) { return parse_enum<Node>(s, kNodes, "node"); }
    Route route_from(std::string_view s) { return parse_enum<Route>(s, kRoutes, "route"); }
    CspMarker csp_marker_from(std::string_view s) { return parse_enum<CspMarker>(s, kMarkers, "csp marker"); }
    EventKind event_kind_from(std::string_view s) { return parse_enum<EventKind>(s, kEventKinds, "event kind"); }

    bool same_header(const Packet &a, const Packet &b) noexcept
    {
        return a.flow == b.flow && a.seq_id == b.seq_id && a.kind == b.kind && a.payload_len == b.payload_len &&
               a.direction == b.direction && a.tcp == b.tcp;
    }

    std::uint64_t header_digest(const Packet &p) noexcept
    {
        Fnv f;
        f.mix(p.flow.src_addr);
        f.mix(p.flow.dst_addr);
        f.mix((std::uint64_t{p.flow.src_port} << 16) | p.flow.dst_port);
        f.mix(p.flow.protocol);
        f.mix(static_cast<std::uint64_t>(p.seq_id));
        f.mix(static_cast<std::uint64_t>(p.kind));
        f.mix(p.payload_len);
        f.mix(static_cast<std::uint64_t>(p.direction));
        f.mix(static_cast<std::uint64_t>(p.tcp.segment));
        f.mix(p.tcp.retransmission ? 1u : 0u);
        f.mix(static_cast<std::uint64_t>(p.tcp.cum_ack));
        for (std::uint8_t i = 0; i < p.tcp.sack_count; ++i)
        {
            f.mix(static_cast<std::uint64_t>(p.tcp.sack[i].start));
            f.mix(static_cast<std::uint64_t>(p.tcp.sack[i].end));
        }
        if (p.tcp.has_dsack)
        {
            f.mix(static_cast<std::uint64_t>(p.tcp.dsack.start));
            f.mix(static_cast<std::uint64_t>(p.tcp.dsack.end));
        }
        return f.h;
    }

    bool operator==(const Trace &a, const Trace &b)
    {
        if (a.scenario_id != b.scenario_id || a.seed != b.seed || a.strategy != b.strategy || !(a.nf == b.nf) ||
            a.events != b.events || a.messages != b.messages || a.output_ids != b.output_ids ||
            a.packets.size() != b.packets.size() || a.states.size() != b.states.size())
        {
            return false;
        }
        for (std::size_t i = 0; i < a.packets.size(); ++i)
        {
            const Packet &x = a.packets[i];
            const Packet &y = b.packets[i];
            if (x.id != y.id || x.admit_ts != y.admit_ts || x.origin != y.origin || !same_header(x, y))
            {
                return false;
            }
        }
        for (std::size_t i = 0; i < a.states.size(); ++i)
        {
            const nf::NFState &x = a.states[i];
            const nf::NFState &y = b.states[i];
            if (!nf::same_substates(x, y) || x.version != y.version || x.last_update_ts != y.last_update_ts)
            {
                return false;
            }
            for (std::size_t j = 0; j < x.substates.size(); ++j)
            {
                if (x.substates[j].ts != y.substates[j].ts)
                {
                    return false;
                }
            }
        }
        return true;
    }
} // namespace flowmig
