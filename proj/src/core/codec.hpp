#pragma once

#include "flowmig/core/trace.hpp"

#include <json.hpp>

namespace flowmig::codec
{
    using nlohmann::json;

    json to_json(const Packet &p);
    Packet packet_from_json(const json &j);

    json to_json(const nf::NFState &q);
    nf::NFState state_from_json(const json &j);

    json to_json(const nf::StateUpdateMessage &m);
    nf::StateUpdateMessage message_from_json(const json &j);

    json to_json(const nf::NfConfig &c);
    nf::NfConfig nf_config_from_json(const json &j);

    json to_json(const nf::NfSchema &s);
    nf::NfSchema schema_from_json(const json &j);

    json to_json(const Event &e);
    Event event_from_json(const json &j);
} // namespace flowmig::codec
