#pragma once

#include "flowmig/core/types.hpp"
#include "flowmig/nf/state.hpp"
#include "flowmig/transport/tcp.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowmig::fms
{
    /// Invalid scenario; field() is a dotted path such as "topology.links[2].delay_ms".
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::string field, const std::string &what)
            : std::runtime_error(field + ": " + what), field_(std::move(field))
        {
        }
        const std::string &field() const noexcept { return field_; }

    private:
        std::string field_;
    };

    enum class Strategy : std::uint8_t
    {
        WeakO,
        BufferAll,
        FreezeDrop,
        NoMigration,
        // Scripted violators: flip without waiting for the CSS queue to drain,
        // or in the middle of a CSP.
        AdversarialSkipQueue,
        AdversarialMidCsp,
    };

    std::string_view to_string(Strategy s) noexcept;
    Strategy strategy_from(std::string_view s);
    bool migrates(Strategy s) noexcept;

    enum class Arrival : std::uint8_t
    {
        Fixed,
        Poisson,
    };

    struct LinkSpec
    {
        Node from = Node::H1;
        Node to = Node::S1;
        double bandwidth_bps = 10e6;
        double delay_ms = 10.0;

        bool operator==(const LinkSpec &) const = default;
    };

    struct FlowSpec
    {
        std::int64_t total_bytes = 20 * 1'481'481;
        std::uint32_t payload_bytes = 1000;
        Arrival arrival = Arrival::Fixed;

        bool operator==(const FlowSpec &) const = default;
    };

    struct Scenario
    {
        std::string scenario_id = "default";
        // Always the 12 directed links of the two-path topology.
        std::vector<LinkSpec> links;
        FlowSpec flow;
        Strategy strategy = Strategy::WeakO;
        double t1_s = 15.0;
        // 0 selects the default re-route timer.
        Tick t_r_ticks = 0;
        std::uint64_t seed = 1;

        nf::NfConfig nf;
        // Negative selects one old-path link delay.
        double message_delay_ms = -1.0;
        Tick poll_interval = 100;
        Tick service_min = 5;
        Tick service_max = 50;
        std::int64_t buffer_cap = 1'000'000;
        transport::TcpConfig tcp;
        Tick time_limit = 3600LL * 1'000'000;

        const LinkSpec &link(Node from, Node to) const;
        LinkSpec &link(Node from, Node to);

        bool operator==(const Scenario &) const = default;
    };

    /// The six forward links h1-s1, s1-nf_src, nf_src-s2, s2-h2, s1-nf_dst, nf_dst-s2.
    const std::vector<std::pair<Node, Node>> &forward_links();

    /// Reference settings: 10 Mbit/s and 10 ms per link, 1000-byte payloads, t1 = 15 s (flow sized so t1 falls inside the transfer).
    Scenario default_scenario();

    /// Reads the documented keys; missing keys keep defaults. Throws ConfigError.
    Scenario scenario_from_json_text(const std::string &text);
    Scenario load_scenario(const std::filesystem::path &path);
    std::string scenario_to_json_text(const Scenario &sc);

    /// Throws ConfigError naming the first offending field.
    void validate(const Scenario &sc);

    /// Segment payload sizes and application release times for the flow.
    struct Workload
    {
        std::vector<std::uint32_t> payload;
        std::vector<Tick> available_at;
    };

    Workload make_workload(const Scenario &sc);

    Tick message_delay(const Scenario &sc);
    Tick default_t_r(const Scenario &sc);
    Tick effective_t_r(const Scenario &sc);

    /// Longest time a packet admitted before a flip can still need to reach and
    /// clear the source NF. T_r below this bound is rejected.
    Tick flip_latency_bound(const Scenario &sc);

    /// Rough transfer duration used to check that t1 falls inside the flow.
    Tick estimated_flow_lifetime(const Scenario &sc);

    Tick serialization_ticks(std::uint32_t bytes, double bandwidth_bps) noexcept;

    /// Apply old/new-path extra delay (ms, per link, both directions). A
    /// negative old-path value is placed on the new path instead.
    void add_path_delay(Scenario &sc, bool old_path, double extra_ms);
    void scale_path_bandwidth(Scenario &sc, bool old_path, double factor);
} // namespace flowmig::fms
