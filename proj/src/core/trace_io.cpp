#include "flowmig/core/trace_io.hpp"

#include "codec.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace flowmig
{
    namespace codec
    {
        namespace
        {
            constexpr std::string_view kFormat = "flowmig-trace/1";

            std::string_view merge_name(nf::MergeKind m)
            {
                switch (m)
                {
                case nf::MergeKind::Assign:
                    return "assign";
                case nf::MergeKind::Max:
                    return "max";
                case nf::MergeKind::Sum:
                    return "sum";
                case nf::MergeKind::Union:
                    return "union";
                }
                return "assign";
            }

            nf::MergeKind merge_from(const std::string &s)
            {
                if (s == "assign")
                    return nf::MergeKind::Assign;
                if (s == "max")
                    return nf::MergeKind::Max;
                if (s == "sum")
                    return nf::MergeKind::Sum;
                if (s == "union")
                    return nf::MergeKind::Union;
                throw MalformedTraceError("unknown merge kind '" + s + "'");
            }

            json value_json(const nf::SubstateValue &v)
            {
                if (const auto *s = std::get_if<std::int64_t>(&v))
                {
                    return *s;
                }
                return std::get<std::vector<std::int64_t>>(v);
            }

            nf::SubstateValue value_from(const json &j)
            {
                if (j.is_array())
                {
                    return j.get<std::vector<std::int64_t>>();
                }
                return j.get<std::int64_t>();
            }

            json block_json(const SackBlock &b) { return json::array({b.start, b.end}); }
            SackBlock block_from(const json &j) { return SackBlock{j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>()}; }
        } // namespace

        json to_json(const Packet &p)
        {
            json tcp{{"segment", p.tcp.segment}, {"retransmission", p.tcp.retransmission}, {"cum_ack", p.tcp.cum_ack}};
            json sack = json::array();
            for (std::uint8_t i = 0; i < p.tcp.sack_count; ++i)
            {
                sack.push_back(block_json(p.tcp.sack[i]));
            }
            tcp["sack"] = std::move(sack);
            if (p.tcp.has_dsack)
            {
                tcp["dsack"] = block_json(p.tcp.dsack);
            }
            return json{{"id", p.id},
                        {"flow",
                         {format_addr(p.flow.src_addr), format_addr(p.flow.dst_addr), p.flow.src_port,
                          p.flow.dst_port, p.flow.protocol}},
                        {"seq_id", p.seq_id},
                        {"admit_ts", p.admit_ts},
                        {"kind", to_string(p.kind)},
                        {"payload_len", p.payload_len},
                        {"direction", to_string(p.direction)},
                        {"tcp", std::move(tcp)},
                        {"origin", p.origin}};
        }

        Packet packet_from_json(const json &j)
        {
            Packet p;
            p.id = j.at("id").get<std::int64_t>();
            const json &f = j.at("flow");
            p.flow.src_addr = parse_addr(f.at(0).get<std::string>());
            p.flow.dst_addr = parse_addr(f.at(1).get<std::string>());
            p.flow.src_port = f.at(2).get<std::uint16_t>();
            p.flow.dst_port = f.at(3).get<std::uint16_t>();
            p.flow.protocol = f.at(4).get<std::uint8_t>();
            p.seq_id = j.at("seq_id").get<std::int64_t>();
            p.admit_ts = j.at("admit_ts").get<Timestamp>();
            p.kind = packet_kind_from(j.at("kind").get<std::string>());
            p.payload_len = j.at("payload_len").get<std::uint32_t>();
            p.direction = direction_from(j.at("direction").get<std::string>());
            const json &tcp = j.at("tcp");
            p.tcp.segment = tcp.at("segment").get<std::int64_t>();
            p.tcp.retransmission = tcp.at("retransmission").get<bool>();
            p.tcp.cum_ack = tcp.at("cum_ack").get<std::int64_t>();
            const json &sack = tcp.at("sack");
            if (sack.size() > p.tcp.sack.size())
            {
                throw MalformedTraceError("more than 3 SACK blocks");
            }
            for (const json &b : sack)
            {
                p.tcp.sack[p.tcp.sack_count++] = block_from(b);
            }
            if (tcp.contains("dsack"))
            {
                p.tcp.has_dsack = true;
                p.tcp.dsack = block_from(tcp.at("dsack"));
            }
            p.origin = j.at("origin").get<std::int64_t>();
            return p;
        }

        json to_json(const nf::NFState &q)
        {
            json values = json::array();
            json ts = json::array();
            for (const nf::Substate &s : q.substates)
            {
                values.push_back(value_json(s.value));
                ts.push_back(s.ts);
            }
            json applied = json::array();
            for (const nf::DeltaKey &k : q.applied)
            {
                applied.push_back(json::array({k.index, k.source_ts}));
            }
            return json{{"values", std::move(values)},
                        {"ts", std::move(ts)},
                        {"version", q.version},
                        {"last_update_ts", q.last_update_ts},
                        {"applied", std::move(applied)}};
        }

        nf::NFState state_from_json(const json &j)
        {
            nf::NFState q;
            const json &values = j.at("values");
            const json &ts = j.at("ts");
            if (values.size() != ts.size())
            {
                throw MalformedTraceError("state values/ts length mismatch");
            }
            for (std::size_t i = 0; i < values.size(); ++i)
            {
                q.substates.push_back(nf::Substate{value_from(values[i]), ts[i].get<Timestamp>()});
            }
            q.version = j.at("version").get<std::uint64_t>();
            q.last_update_ts = j.at("last_update_ts").get<Timestamp>();
            for (const json &k : j.at("applied"))
            {
                q.applied.push_back(nf::DeltaKey{k.at(0).get<int>(), k.at(1).get<Timestamp>()});
            }
            return q;
        }

        json to_json(const nf::StateUpdateMessage &m)
        {
            json deltas = json::array();
            for (const nf::Delta &d : m.deltas)
            {
                deltas.push_back(json::array({d.index, value_json(d.value), d.source_ts}));
            }
            return json{{"id", m.id},
                        {"sender", to_string(m.sender)},
                        {"target", to_string(m.target)},
                        {"class", nf::to_string(m.cls)},
                        {"deltas", std::move(deltas)}};
        }

        nf::StateUpdateMessage message_from_json(const json &j)
        {
            nf::StateUpdateMessage m;
            m.id = j.at("id").get<std::int64_t>();
            m.sender = node_from(j.at("sender").get<std::string>());
            m.target = node_from(j.at("target").get<std::string>());
            m.cls = nf::message_class_from(j.at("class").get<std::string>());
            for (const json &d : j.at("deltas"))
            {
                m.deltas.push_back(nf::Delta{d.at(0).get<int>(), value_from(d.at(1)), d.at(2).get<Timestamp>()});
            }
            return m;
        }

        json to_json(const nf::NfConfig &c)
        {
            return json{{"kind", nf::to_string(c.kind)},
                        {"public_addr", format_addr(c.nat.public_addr)},
                        {"port_lo", c.nat.port_lo},
                        {"port_hi", c.nat.port_hi},
                        {"in_use", c.nat.in_use}};
        }

        nf::NfConfig nf_config_from_json(const json &j)
        {
            nf::NfConfig c;
            c.kind = nf::nf_kind_from(j.at("kind").get<std::string>());
            if (j.contains("public_addr"))
                c.nat.public_addr = parse_addr(j.at("public_addr").get<std::string>());
            if (j.contains("port_lo"))
                c.nat.port_lo = j.at("port_lo").get<std::uint16_t>();
            if (j.contains("port_hi"))
                c.nat.port_hi = j.at("port_hi").get<std::uint16_t>();
            if (j.contains("in_use"))
                c.nat.in_use = j.at("in_use").get<std::set<std::uint16_t>>();
            if (c.nat.port_lo == 0 || c.nat.port_lo > c.nat.port_hi)
            {
                throw std::invalid_argument("nf.port_lo must be in 1..port_hi");
            }
            return c;
        }

        json to_json(const nf::NfSchema &s)
        {
            json subs = json::array();
            for (const nf::SubstateSpec &sp : s.substates)
            {
                subs.push_back(json{{"name", sp.name}, {"merge", merge_name(sp.merge)}, {"is_set", sp.is_set}});
            }
            return json{{"kind", nf::to_string(s.kind)},
                        {"name", s.name},
                        {"substates", std::move(subs)},
                        {"css_indices", s.css_indices},
                        {"requires_order", s.requires_order}};
        }

        nf::NfSchema schema_from_json(const json &j)
        {
            nf::NfSchema s;
            s.kind = nf::nf_kind_from(j.at("kind").get<std::string>());
            s.name = j.at("name").get<std::string>();
            for (const json &sp : j.at("substates"))
            {
                s.substates.push_back(nf::SubstateSpec{sp.at("name").get<std::string>(),
                                                       merge_from(sp.at("merge").get<std::string>()),
                                                       sp.at("is_set").get<bool>()});
            }
            s.css_indices = j.at("css_indices").get<nf::IndexSet>();
            s.requires_order = j.at("requires_order").get<bool>();
            return s;
        }

        json to_json(const Event &e)
        {
            json j{{"time", e.time}, {"kind", to_string(e.kind)}, {"site", to_string(e.site)}};
            if (e.packet != kNone)
                j["packet"] = e.packet;
            if (e.output_begin != 0 || e.output_count != 0)
            {
                j["output_begin"] = e.output_begin;
                j["output_count"] = e.output_count;
            }
            if (e.message != kNone)
                j["message"] = e.message;
            if (e.state_before != kNone)
                j["state_before"] = e.state_before;
            if (e.state_after != kNone)
                j["state_after"] = e.state_after;
            if (e.route != Route::None)
                j["route"] = to_string(e.route);
            if (e.marker != CspMarker::NotInCSP)
                j["marker"] = to_string(e.marker);
            if (e.aux != 0)
                j["aux"] = e.aux;
            return j;
        }

        Event event_from_json(const json &j)
        {
            Event e;
            e.time = j.at("time").get<Tick>();
            e.kind = event_kind_from(j.at("kind").get<std::string>());
            e.site = node_from(j.at("site").get<std::string>());
            e.packet = j.value("packet", kNone);
            e.output_begin = j.value("output_begin", std::int64_t{0});
            e.output_count = j.value("output_count", std::int32_t{0});
            e.message = j.value("message", kNone);
            e.state_before = j.value("state_before", kNone);
            e.state_after = j.value("state_after", kNone);
            if (j.contains("route"))
                e.route = route_from(j.at("route").get<std::string>());
            if (j.contains("marker"))
                e.marker = csp_marker_from(j.at("marker").get<std::string>());
            e.aux = j.value("aux", std::int64_t{0});
            return e;
        }
    } // namespace codec

    namespace
    {
        using codec::json;

        // Tracks how much of each table has already been written.
        struct DefCursor
        {
            std::size_t packets = 0;
            std::size_t states = 0;
            std::size_t messages = 0;
            std::size_t outputs = 0;

            json take(const Trace &t, std::size_t packet_hi, std::size_t state_hi, std::size_t message_hi,
                      std::size_t output_hi)
            {
                json defs = json::object();
                packet_hi = std::min(packet_hi, t.packets.size());
                state_hi = std::min(state_hi, t.states.size());
                message_hi = std::min(message_hi, t.messages.size());
                output_hi = std::min(output_hi, t.output_ids.size());
                // Output packets may have ids beyond the event's own packet.
                for (std::size_t i = outputs; i < output_hi; ++i)
                {
                    packet_hi = std::max(packet_hi, static_cast<std::size_t>(t.output_ids[i]) + 1);
                }
                if (packets < packet_hi)
                {
                    json arr = json::array();
                    for (; packets < packet_hi; ++packets)
                        arr.push_back(codec::to_json(t.packets[packets]));
                    defs["packets"] = std::move(arr);
                }
                if (states < state_hi)
                {
                    json arr = json::array();
                    for (; states < state_hi; ++states)
                        arr.push_back(codec::to_json(t.states[states]));
                    defs["states"] = std::move(arr);
                }
                if (messages < message_hi)
                {
                    json arr = json::array();
                    for (; messages < message_hi; ++messages)
                        arr.push_back(codec::to_json(t.messages[messages]));
                    defs["messages"] = std::move(arr);
                }
                if (outputs < output_hi)
                {
                    json arr = std::vector<std::int64_t>(t.output_ids.begin() + static_cast<std::ptrdiff_t>(outputs),
                                                         t.output_ids.begin() + static_cast<std::ptrdiff_t>(output_hi));
                    outputs = output_hi;
                    defs["output_ids"] = std::move(arr);
                }
                return defs;
            }
        };

        std::size_t upto(std::int64_t id) { return id == kNone ? 0 : static_cast<std::size_t>(id) + 1; }
    } // namespace

    void write_trace(std::ostream &os, const Trace &t)
    {
        json header{{"format", codec::kFormat},
                    {"scenario_id", t.scenario_id},
                    {"seed", t.seed},
                    {"strategy", t.strategy},
                    {"nf", codec::to_json(t.nf)},
                    {"schema", codec::to_json(t.schema)}};
        os << header.dump() << '\n';

        DefCursor cur;
        for (const Event &e : t.events)
        {
            json line = codec::to_json(e);
            json defs = cur.take(t, upto(e.packet), std::max(upto(e.state_before), upto(e.state_after)),
                                 upto(e.message), static_cast<std::size_t>(e.output_begin + e.output_count));
            if (!defs.empty())
            {
                line["defs"] = std::move(defs);
            }
            os << line.dump() << '\n';
        }
        json rest = cur.take(t, t.packets.size(), t.states.size(), t.messages.size(), t.output_ids.size());
        os << json{{"end", true}, {"defs", std::move(rest)}}.dump() << '\n';
    }

    std::string trace_to_string(const Trace &t)
    {
        std::ostringstream os;
        write_trace(os, t);
        return os.str();
    }

    void save_trace(const std::filesystem::path &path, const Trace &t)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
        {
            throw std::runtime_error("cannot write " + path.string());
        }
        write_trace(os, t);
    }

    Trace read_trace(std::istream &is)
    {
        Trace t;
        std::string line;
        std::size_t lineno = 0;
        bool have_header = false;
        bool ended = false;

        auto absorb = [&t](const json &defs) {
            if (defs.contains("packets"))
                for (const json &p : defs.at("packets"))
                    t.packets.push_back(codec::packet_from_json(p));
            if (defs.contains("states"))
                for (const json &q : defs.at("states"))
                    t.states.push_back(codec::state_from_json(q));
            if (defs.contains("messages"))
                for (const json &m : defs.at("messages"))
                    t.messages.push_back(codec::message_from_json(m));
            if (defs.contains("output_ids"))
                for (const json &o : defs.at("output_ids"))
                    t.output_ids.push_back(o.get<std::int64_t>());
        };

        while (std::getline(is, line))
        {
            ++lineno;
            if (line.empty())
            {
                continue;
            }
            try
            {
                json j = json::parse(line);
                if (!have_header)
                {
                    if (j.value("format", std::string{}) != codec::kFormat)
                    {
                        throw MalformedTraceError("missing trace header");
                    }
                    t.scenario_id = j.at("scenario_id").get<std::string>();
                    t.seed = j.at("seed").get<std::uint64_t>();
                    t.strategy = j.at("strategy").get<std::string>();
                    t.nf = codec::nf_config_from_json(j.at("nf"));
                    t.schema = codec::schema_from_json(j.at("schema"));
                    have_header = true;
                    continue;
                }
                if (ended)
                {
                    throw MalformedTraceError("record after end marker");
                }
                if (j.contains("defs"))
                {
                    absorb(j.at("defs"));
                }
                if (j.value("end", false))
                {
                    ended = true;
                    continue;
                }
                t.events.push_back(codec::event_from_json(j));
            }
            catch (const MalformedTraceError &e)
            {
                throw MalformedTraceError("line " + std::to_string(lineno) + ": " + e.what());
            }
            catch (const std::exception &e)
            {
                throw MalformedTraceError("line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        if (!have_header)
        {
            throw MalformedTraceError("empty trace");
        }
        if (!ended)
        {
            throw MalformedTraceError("truncated trace (no end marker)");
        }
        return t;
    }

    Trace trace_from_string(const std::string &text)
    {
        std::istringstream is(text);
        return read_trace(is);
    }

    Trace load_trace(const std::filesystem::path &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
        {
            throw std::runtime_error("cannot read " + path.string());
        }
        return read_trace(is);
    }
} // namespace flowmig
