// udp_bridge.hpp
//
// Runs the honest two-party handshake over loopback UDP.  Each endpoint is
// one blocking socket; with role "both" the responder runs on a second
// thread of the same process.  Principals, serials and session seeds are
// the ones the in-memory simulator derives from the same seed, so the
// datagrams carry the bytes an in-memory run puts on its wire.  No
// adversary actions exist in this mode.

#ifndef IKEUSB_UDP_BRIDGE_HPP
#define IKEUSB_UDP_BRIDGE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ikeusb/protocol.hpp"

namespace ikeusb::udp {

enum class EndpointRole { Both, Initiator, Responder };

// "both", "initiator", "responder"; ConfigError otherwise
EndpointRole parse_endpoint_role(std::string_view name);

struct UdpOptions {
    protocol::Variant variant = protocol::Variant::Improved;
    std::uint64_t seed = 1;
    EndpointRole role = EndpointRole::Both;
    std::string host = "127.0.0.1";
    std::uint16_t port = 50500;
    bool initiator_token = true;
    bool responder_token = true;
    int timeout_ms = 3000;
};

struct Datagram {
    int message = 0;
    std::string from;
    std::string to;
    Bytes bytes;
};

struct EndpointResult {
    std::string principal;
    protocol::State state = protocol::State::Idle;
    std::optional<protocol::Failure> failure;
    std::optional<crypto::SkeyidBundle> skeyid;
    bool timed_out = false;
};

struct UdpOutcome {
    std::vector<Datagram> ladder;  // datagrams sent by the local endpoint(s)
    std::optional<EndpointResult> initiator;
    std::optional<EndpointResult> responder;
};

// Error(ConfigError) when a socket cannot be opened or bound.
UdpOutcome run_udp_handshake(const UdpOptions &options);

} // namespace ikeusb::udp

#endif
