#include "flowmig/fms/scenario.hpp"

#include "../core/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace flowmig::fms
{
    using codec::json;

    namespace
    {
        constexpr std::array<std::string_view, 6> kStrategies{"WeakO",      "BufferAll",           "FreezeDrop",
                                                              "NoMigration", "AdversarialSkipQueue", "AdversarialMidCsp"};

        constexpr std::uint32_t kMaxPoissonPayload = 9000;

        bool on_old_path(Node a, Node b) { return a == Node::NfSrc || b == Node::NfSrc; }
        bool on_new_path(Node a, Node b) { return a == Node::NfDst || b == Node::NfDst; }

        double unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

        double exponential(std::mt19937_64 &rng, double mean) { return -mean * std::log1p(-unit(rng)); }

        template <typename T>
        T get_field(const json &j, const char *key, const std::string &path)
        {
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError(path.empty() ? std::string(key) : path + "." + key,
                                  j.contains(key) ? "wrong type" : "missing");
            }
        }

        Node node_field(const json &j, const char *key, const std::string &path)
        {
            const auto name = get_field<std::string>(j, key, path);
            try
            {
                const Node n = node_from(name);
                if (n == Node::Smm || n == Node::Controller)
                {
                    throw std::invalid_argument("not a topology node");
                }
                return n;
            }
            catch (const std::invalid_argument &)
            {
                throw ConfigError(path + "." + key, "unknown node '" + name + "'");
            }
        }

        void reject_unknown(const json &j, std::initializer_list<std::string_view> allowed, const std::string &path)
        {
            for (const auto &[k, v] : j.items())
            {
                if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                {
                    throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
                }
            }
        }

        std::string link_path(const LinkSpec &l)
        {
            return "topology.links[" + std::string(to_string(l.from)) + "->" + std::string(to_string(l.to)) + "]";
        }

        std::uint32_t max_payload(const Scenario &sc)
        {
            return sc.flow.arrival == Arrival::Poisson ? kMaxPoissonPayload : sc.flow.payload_bytes;
        }
    } // namespace

    std::string_view to_string(Strategy s) noexcept { return kStrategies[static_cast<std::size_t>(s)]; }

    Strategy strategy_from(std::string_view s)
    {
        for (std::size_t i = 0; i < kStrategies.size(); ++i)
        {
            if (kStrategies[i] == s)
            {
                return static_cast<Strategy>(i);
            }
        }
        throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
    }

    bool migrates(Strategy s) noexcept { return s != Strategy::NoMigration; }

    const std::vector<std::pair<Node, Node>> &forward_links()
    {
        static const std::vector<std::pair<Node, Node>> links{
            {Node::H1, Node::S1},    {Node::S1, Node::NfSrc}, {Node::NfSrc, Node::S2},
            {Node::S2, Node::H2},    {Node::S1, Node::NfDst}, {Node::NfDst, Node::S2},
        };
        return links;
    }

    const LinkSpec &Scenario::link(Node from, Node to) const
    {
        for (const LinkSpec &l : links)
        {
            if (l.from == from && l.to == to)
            {
                return l;
            }
        }
        throw ConfigError("topology.links", "no link " + std::string(to_string(from)) + "->" +
                                                std::string(to_string(to)));
    }

    LinkSpec &Scenario::link(Node from, Node to)
    {
        return const_cast<LinkSpec &>(static_cast<const Scenario &>(*this).link(from, to));
    }

    Scenario default_scenario()
    {
        Scenario sc;
        for (const auto &[a, b] : forward_links())
        {
            sc.links.push_back(LinkSpec{a, b, 10e6, 10.0});
        }
        for (const auto &[a, b] : forward_links())
        {
            sc.links.push_back(LinkSpec{b, a, 10e6, 10.0});
        }
        return sc;
    }

    Scenario scenario_from_json_text(const std::string &text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("(file)", std::string("not valid JSON: ") + e.what());
        }
        if (!j.is_object())
        {
            throw ConfigError("(file)", "top level must be an object");
        }
        reject_unknown(j,
                       {"scenario_id", "topology", "flow", "strategy", "t1_s", "t_r_ticks", "seed", "nf",
                        "message_delay_ms", "poll_interval_us", "service_min_us", "service_max_us", "buffer_cap",
                        "tcp", "time_limit_s"},
                       "");

        Scenario sc = default_scenario();
        if (j.contains("scenario_id"))
            sc.scenario_id = get_field<std::string>(j, "scenario_id", "");

        if (j.contains("topology"))
        {
            const json &topo = j.at("topology");
            reject_unknown(topo, {"links"}, "topology");
            const json &links = topo.at("links");
            if (!links.is_array())
            {
                throw ConfigError("topology.links", "must be an array");
            }
            std::vector<std::pair<Node, Node>> explicit_links;
            for (std::size_t i = 0; i < links.size(); ++i)
            {
                const std::string path = "topology.links[" + std::to_string(i) + "]";
                const json &lj = links[i];
                if (!lj.is_object())
                {
                    throw ConfigError(path, "must be an object");
                }
                reject_unknown(lj, {"from", "to", "bandwidth_bps", "delay_ms"}, path);
                LinkSpec l;
                l.from = node_field(lj, "from", path);
                l.to = node_field(lj, "to", path);
                l.bandwidth_bps = get_field<double>(lj, "bandwidth_bps", path);
                l.delay_ms = get_field<double>(lj, "delay_ms", path);
                if (!(l.bandwidth_bps > 0) || !std::isfinite(l.bandwidth_bps))
                {
                    throw ConfigError(path + ".bandwidth_bps", "must be > 0");
                }
                if (!(l.delay_ms >= 0) || !std::isfinite(l.delay_ms))
                {
                    throw ConfigError(path + ".delay_ms", "must be >= 0");
                }
                bool known = false;
                for (LinkSpec &dst : sc.links)
                {
                    if (dst.from == l.from && dst.to == l.to)
                    {
                        dst = l;
                        known = true;
                    }
                }
                if (!known)
                {
                    throw ConfigError(path, "link " + std::string(to_string(l.from)) + "->" +
                                                std::string(to_string(l.to)) + " is not part of the topology");
                }
                explicit_links.emplace_back(l.from, l.to);
            }
            // A link given in one direction only is mirrored.
            for (const auto &[a, b] : explicit_links)
            {
                if (std::find(explicit_links.begin(), explicit_links.end(), std::make_pair(b, a)) ==
                    explicit_links.end())
                {
                    const LinkSpec &fwd = sc.link(a, b);
                    LinkSpec &rev = sc.link(b, a);
                    rev.bandwidth_bps = fwd.bandwidth_bps;
                    rev.delay_ms = fwd.delay_ms;
                }
            }
        }

        if (j.contains("flow"))
        {
            const json &f = j.at("flow");
            reject_unknown(f, {"total_bytes", "payload_bytes", "arrival"}, "flow");
            if (f.contains("total_bytes"))
                sc.flow.total_bytes = get_field<std::int64_t>(f, "total_bytes", "flow");
            if (f.contains("payload_bytes"))
                sc.flow.payload_bytes = get_field<std::uint32_t>(f, "payload_bytes", "flow");
            if (f.contains("arrival"))
            {
                const auto a = get_field<std::string>(f, "arrival", "flow");
                if (a == "fixed")
                    sc.flow.arrival = Arrival::Fixed;
                else if (a == "poisson")
                    sc.flow.arrival = Arrival::Poisson;
                else
                    throw ConfigError("flow.arrival", "must be fixed or poisson");
            }
        }

        if (j.contains("strategy"))
        {
            const auto s = get_field<std::string>(j, "strategy", "");
            try
            {
                sc.strategy = strategy_from(s);
            }
            catch (const std::invalid_argument &)
            {
                throw ConfigError("strategy", "unknown strategy '" + s + "'");
            }
        }
        if (j.contains("t1_s"))
            sc.t1_s = get_field<double>(j, "t1_s", "");
        if (j.contains("t_r_ticks"))
            sc.t_r_ticks = get_field<Tick>(j, "t_r_ticks", "");
        if (j.contains("seed"))
            sc.seed = get_field<std::uint64_t>(j, "seed", "");
        if (j.contains("nf"))
        {
            try
            {
                sc.nf = codec::nf_config_from_json(j.at("nf"));
            }
            catch (const std::exception &e)
            {
                throw ConfigError("nf", e.what());
            }
        }
        if (j.contains("message_delay_ms"))
            sc.message_delay_ms = get_field<double>(j, "message_delay_ms", "");
        if (j.contains("poll_interval_us"))
            sc.poll_interval = get_field<Tick>(j, "poll_interval_us", "");
        if (j.contains("service_min_us"))
            sc.service_min = get_field<Tick>(j, "service_min_us", "");
        if (j.contains("service_max_us"))
            sc.service_max = get_field<Tick>(j, "service_max_us", "");
        if (j.contains("buffer_cap"))
            sc.buffer_cap = get_field<std::int64_t>(j, "buffer_cap", "");
        if (j.contains("time_limit_s"))
            sc.time_limit = ticks_from_s(get_field<double>(j, "time_limit_s", ""));
        if (j.contains("tcp"))
        {
            const json &t = j.at("tcp");
            reject_unknown(t, {"initial_cwnd", "max_cwnd", "dupthresh", "max_dupthresh"}, "tcp");
            if (t.contains("initial_cwnd"))
                sc.tcp.initial_cwnd = get_field<double>(t, "initial_cwnd", "tcp");
            if (t.contains("max_cwnd"))
                sc.tcp.max_cwnd = get_field<double>(t, "max_cwnd", "tcp");
            if (t.contains("dupthresh"))
                sc.tcp.dupthresh = get_field<int>(t, "dupthresh", "tcp");
            if (t.contains("max_dupthresh"))
                sc.tcp.max_dupthresh = get_field<int>(t, "max_dupthresh", "tcp");
        }
        validate(sc);
        return sc;
    }

    Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream is(path);
        if (!is)
        {
            throw ConfigError("(file)", "cannot read " + path.string());
        }
        std::stringstream ss;
        ss << is.rdbuf();
        return scenario_from_json_text(ss.str());
    }

    std::string scenario_to_json_text(const Scenario &sc)
    {
        json links = json::array();
        for (const LinkSpec &l : sc.links)
        {
            links.push_back(json{{"from", to_string(l.from)},
                                 {"to", to_string(l.to)},
                                 {"bandwidth_bps", l.bandwidth_bps},
                                 {"delay_ms", l.delay_ms}});
        }
        json j{{"scenario_id", sc.scenario_id},
               {"topology", {{"links", std::move(links)}}},
               {"flow",
                {{"total_bytes", sc.flow.total_bytes},
                 {"payload_bytes", sc.flow.payload_bytes},
                 {"arrival", sc.flow.arrival == Arrival::Fixed ? "fixed" : "poisson"}}},
               {"strategy", to_string(sc.strategy)},
               {"t1_s", sc.t1_s},
               {"t_r_ticks", sc.t_r_ticks},
               {"seed", sc.seed},
               {"nf", codec::to_json(sc.nf)},
               {"message_delay_ms", sc.message_delay_ms},
               {"poll_interval_us", sc.poll_interval},
               {"service_min_us", sc.service_min},
               {"service_max_us", sc.service_max},
               {"buffer_cap", sc.buffer_cap},
               {"time_limit_s", seconds_from_ticks(sc.time_limit)},
               {"tcp",
                {{"initial_cwnd", sc.tcp.initial_cwnd},
                 {"max_cwnd", sc.tcp.max_cwnd},
                 {"dupthresh", sc.tcp.dupthresh},
                 {"max_dupthresh", sc.tcp.max_dupthresh}}}};
        return j.dump(2);
    }

    Tick serialization_ticks(std::uint32_t bytes, double bandwidth_bps) noexcept
    {
        return static_cast<Tick>(std::llround(static_cast<double>(bytes) * 8.0 * 1e6 / bandwidth_bps));
    }

    Tick message_delay(const Scenario &sc)
    {
        if (sc.message_delay_ms >= 0)
        {
            return ticks_from_ms(sc.message_delay_ms);
        }
        return ticks_from_ms(sc.link(Node::S1, Node::NfSrc).delay_ms);
    }

    Tick flip_latency_bound(const Scenario &sc)
    {
        const std::uint32_t s = max_payload(sc);
        Tick worst = 0;
        for (Node ingress : {Node::S1, Node::S2})
        {
            const LinkSpec &l = sc.link(ingress, Node::NfSrc);
            worst = std::max(worst, ticks_from_ms(l.delay_ms) + serialization_ticks(s, l.bandwidth_bps));
        }
        // One packet of each direction may be ahead in the NF queue.
        return worst + 2 * sc.service_max;
    }

    Tick default_t_r(const Scenario &sc)
    {
        const std::uint32_t s = max_payload(sc);
        Tick prop = 0;
        for (Node nf : {Node::NfSrc, Node::NfDst})
        {
            for (bool reverse : {false, true})
            {
                const Node hops[] = {Node::H1, Node::S1, nf, Node::S2, Node::H2};
                Tick path = 0;
                for (int i = 0; i < 4; ++i)
                {
                    const LinkSpec &l = reverse ? sc.link(hops[i + 1], hops[i]) : sc.link(hops[i], hops[i + 1]);
                    path += ticks_from_ms(l.delay_ms);
                }
                prop = std::max(prop, path);
            }
        }
        Tick ser = 0;
        for (const LinkSpec &l : sc.links)
        {
            ser = std::max(ser, serialization_ticks(s, l.bandwidth_bps));
        }
        return std::max(2 * (prop + ser), flip_latency_bound(sc));
    }

    Tick effective_t_r(const Scenario &sc) { return sc.t_r_ticks > 0 ? sc.t_r_ticks : default_t_r(sc); }

    Tick estimated_flow_lifetime(const Scenario &sc)
    {
        const double access = sc.link(Node::H1, Node::S1).bandwidth_bps;
        double seconds = static_cast<double>(sc.flow.total_bytes) * 8.0 / access;
        if (sc.flow.arrival == Arrival::Poisson)
        {
            // Mean interarrival is payload_bytes microseconds.
            const double packets = static_cast<double>(sc.flow.total_bytes) / sc.flow.payload_bytes;
            seconds = std::max(seconds, packets * sc.flow.payload_bytes * 1e-6);
        }
        return ticks_from_s(seconds);
    }

    void validate(const Scenario &sc)
    {
        for (const auto &[a, b] : forward_links())
        {
            for (const auto &[x, y] : {std::make_pair(a, b), std::make_pair(b, a)})
            {
                const LinkSpec &l = sc.link(x, y);
                if (!(l.bandwidth_bps > 0) || !std::isfinite(l.bandwidth_bps))
                {
                    throw ConfigError(link_path(l) + ".bandwidth_bps", "must be > 0");
                }
                if (!(l.delay_ms >= 0) || !std::isfinite(l.delay_ms))
                {
                    throw ConfigError(link_path(l) + ".delay_ms", "must be >= 0");
                }
            }
        }
        if (sc.links.size() != 2 * forward_links().size())
        {
            throw ConfigError("topology.links", "expected exactly the 12 directed topology links");
        }
        if (sc.flow.total_bytes <= 0)
        {
            throw ConfigError("flow.total_bytes", "must be > 0");
        }
        if (sc.flow.payload_bytes == 0 || sc.flow.payload_bytes > 65535)
        {
            throw ConfigError("flow.payload_bytes", "must be in 1..65535");
        }
        if (!(sc.t1_s >= 0) || !std::isfinite(sc.t1_s))
        {
            throw ConfigError("t1_s", "must be >= 0");
        }
        if (migrates(sc.strategy) && ticks_from_s(sc.t1_s) >= estimated_flow_lifetime(sc))
        {
            throw ConfigError("t1_s", "migration start " + std::to_string(sc.t1_s) +
                                          " s is not inside the flow lifetime (about " +
                                          std::to_string(seconds_from_ticks(estimated_flow_lifetime(sc))) + " s)");
        }
        if (sc.t_r_ticks < 0)
        {
            throw ConfigError("t_r_ticks", "must be >= 0 (0 selects the default)");
        }
        if (sc.t_r_ticks > 0 && sc.t_r_ticks < flip_latency_bound(sc))
        {
            throw ConfigError("t_r_ticks", "below the worst-case flip latency of " +
                                               std::to_string(flip_latency_bound(sc)) + " ticks");
        }
        if (sc.poll_interval <= 0)
        {
            throw ConfigError("poll_interval_us", "must be > 0");
        }
        if (sc.service_min < 1 || sc.service_max < sc.service_min)
        {
            throw ConfigError("service_min_us", "need 1 <= service_min_us <= service_max_us");
        }
        if (sc.buffer_cap < 1)
        {
            throw ConfigError("buffer_cap", "must be >= 1");
        }
        if (!(sc.tcp.initial_cwnd >= 1) || sc.tcp.max_cwnd < sc.tcp.initial_cwnd)
        {
            throw ConfigError("tcp.initial_cwnd", "need 1 <= initial_cwnd <= max_cwnd");
        }
        if (sc.tcp.dupthresh < 3 || sc.tcp.max_dupthresh < sc.tcp.dupthresh)
        {
            throw ConfigError("tcp.dupthresh", "need 3 <= dupthresh <= max_dupthresh");
        }
        if (sc.time_limit <= 0)
        {
            throw ConfigError("time_limit_s", "must be > 0");
        }
    }

    Workload make_workload(const Scenario &sc)
    {
        Workload w;
        const std::int64_t total = sc.flow.total_bytes;
        if (sc.flow.arrival == Arrival::Fixed)
        {
            const std::int64_t s = sc.flow.payload_bytes;
            const std::int64_t n = (total + s - 1) / s;
            w.payload.assign(static_cast<std::size_t>(n), static_cast<std::uint32_t>(s));
            w.payload.back() = static_cast<std::uint32_t>(total - (n - 1) * s);
            w.available_at.assign(static_cast<std::size_t>(n), 0);
            return w;
        }
        std::mt19937_64 rng(sc.seed ^ 0x5eedf10f5eedf10full);
        const double mean = sc.flow.payload_bytes;
        std::int64_t sent = 0;
        double clock = 0;
        while (sent < total)
        {
            auto len = static_cast<std::int64_t>(std::llround(exponential(rng, mean)));
            len = std::clamp<std::int64_t>(len, 1, kMaxPoissonPayload);
            len = std::min(len, total - sent);
            clock += exponential(rng, mean);
            w.payload.push_back(static_cast<std::uint32_t>(len));
            w.available_at.push_back(static_cast<Tick>(std::llround(clock)));
            sent += len;
        }
        return w;
    }

    void add_path_delay(Scenario &sc, bool old_path, double extra_ms)
    {
        if (old_path && extra_ms < 0)
        {
            old_path = false;
            extra_ms = -extra_ms;
        }
        for (LinkSpec &l : sc.links)
        {
            if (old_path ? on_old_path(l.from, l.to) : on_new_path(l.from, l.to))
            {
                l.delay_ms += extra_ms;
            }
        }
    }

    void scale_path_bandwidth(Scenario &sc, bool old_path, double factor)
    {
        for (LinkSpec &l : sc.links)
        {
            if (old_path ? on_old_path(l.from, l.to) : on_new_path(l.from, l.to))
            {
                l.bandwidth_bps *= factor;
            }
        }
    }
} // namespace flowmig::fms
