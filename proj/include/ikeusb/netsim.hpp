// netsim.hpp
//
// deterministic in-memory network with an adversary
//
// Principals exchange wire bytes through a FIFO event loop.  An
// AdversaryScript can flood a responder with forged message 1 packets,
// flip bytes of a handshake message in flight, watch every packet with a
// given level of knowledge, and replay captured packets.  Everything is a
// function of the scenario seed, so a scenario run twice produces the same
// ScenarioReport byte for byte.

#ifndef IKEUSB_NETSIM_HPP
#define IKEUSB_NETSIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ikeusb/bytes.hpp"
#include "ikeusb/codec.hpp"
#include "ikeusb/protocol.hpp"
#include "ikeusb/token.hpp"

namespace ikeusb::netsim {

// --- scenario ---------------------------------------------------------------

struct PrincipalConfig {
    std::string name;
    std::uint32_t address = 0;
    bool has_token = true;
    std::optional<Serial> serial;  // defaults to one derived from the name
};

struct HandshakeSpec {
    std::string initiator;
    std::string responder;
};

struct FloodAction {
    std::size_t count = 0;
    bool forge_source = true;
    std::string target;
    std::string msg_template = "msg1";  // "msg1" or "garbage"
};

// Either a payload type (resolved against the cleartext chain) or a raw
// offset into the message.
struct TamperSelector {
    std::optional<codec::PayloadType> payload;
    std::optional<std::size_t> raw_offset;
};

struct TamperAction {
    int message = 1;  // ladder message of the first handshake, 1..3
    TamperSelector selector;
    std::size_t byte_index = 0;  // within the payload body, or added to raw_offset
    std::uint8_t xor_value = 0x01;
};

enum class Knowledge { None, HasKey1AndToken };

struct ObserveAction {
    Knowledge knowledge = Knowledge::None;
};

struct ReplayAction {
    int message = 1;         // ladder message of the first handshake to capture
    std::size_t delay = 0;   // deliveries to wait before re-injecting
};

using AdversaryAction = std::variant<FloodAction, TamperAction, ObserveAction, ReplayAction>;

struct ScenarioConfig {
    std::string name = "scenario";
    protocol::Variant variant = protocol::Variant::Improved;
    std::uint64_t seed = 1;
    std::string dh_group = "oakley768";
    std::optional<crypto::SymmetricKey> key1;  // defaults to one derived from the seed
    std::string signature_scheme = "ed25519";
    std::string cipher = "aes-256-gcm";
    std::vector<PrincipalConfig> principals;
    std::vector<HandshakeSpec> handshakes;
    std::vector<AdversaryAction> adversary;
    bool dos_gate = true;  // test hook only
};

// ConfigError on anything malformed or inconsistent
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::string &path);
std::string scenario_to_json(const ScenarioConfig &config);
void validate(const ScenarioConfig &config);

// Two principals, alice (initiator, serial AB12345) and bob (responder,
// serial CD67890), one handshake and a passive observer.
ScenarioConfig default_handshake_scenario(protocol::Variant variant, std::uint64_t seed);

// The fixed four-scenario battery: honest, flood, tamper-sa, tamper-ke.
inline constexpr std::string_view kBatteryVersion = "battery-v1";
std::vector<ScenarioConfig> matrix_battery(protocol::Variant variant, std::uint64_t seed);

// --- report -----------------------------------------------------------------

struct Finding {
    std::size_t message_index = 0;  // position in the wire log
    std::string knowledge;          // "none" or "key1+token"
    std::string payload;            // payload name, or "serial"
    std::string hex;                // recovered plaintext
};

struct FailureRecord {
    std::size_t seq = 0;
    std::string principal;
    std::string role;
    int message = 0;
    std::string step;
    std::string detail;
    bool injected = false;               // session started by adversary traffic
    std::uint64_t sig_verifies_total = 0;  // across the whole network at that moment
};

struct PairResult {
    std::string initiator;
    std::string responder;
    std::string initiator_state;
    std::string responder_state;
    bool established = false;
    bool skeyid_match = false;
};

struct WireRecord {
    std::size_t index = 0;
    std::string from;
    std::string to;
    int message = 0;     // ladder number, 0 for adversary traffic
    bool injected = false;
    bool tampered = false;
    std::size_t size = 0;
    std::string layout;  // e.g. "DEV(55) 40B | *sealed 212B"
};

struct TraceRecord {
    std::size_t seq = 0;
    std::string principal;
    std::string role;
    std::string action;
    int message = 0;
    std::string from;
    std::string to;
    protocol::Counters delta;
    std::string step;
    std::string detail;
};

struct Evidence {
    // flood
    std::uint64_t flood_sent = 0;
    std::uint64_t flood_dh_ops = 0;
    std::uint64_t flood_rejected_pre_dh = 0;
    // tamper
    std::uint64_t tamper_applied = 0;
    std::vector<std::string> tamper_targets;  // payload names hit
    bool tamper_detected = false;
    bool tamper_pre_signature = false;
    std::string tamper_failure_step;
    // passive observation without keys
    std::uint64_t observed_messages = 0;
    std::uint64_t observed_none_findings = 0;
    std::uint64_t observed_sa_ke_findings = 0;
    std::uint64_t observed_cert_sig_findings = 0;
    bool plaintext_cert_on_wire = false;
    // signing
    std::uint64_t device_signs = 0;
    std::uint64_t file_signs = 0;
};

struct NetworkStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t undeliverable = 0;
    std::uint64_t tampered = 0;
    std::uint64_t replayed = 0;
};

// Comparison-matrix columns; an absent optional means the report carries no evidence
struct VerdictMap {
    std::optional<bool> sa_ke_protection;
    std::optional<bool> cert_sig_protection;
    std::optional<bool> dos_prevention;
    std::optional<std::string> certificate_storage;  // "device" or "file"

    bool complete() const
    {
        return sa_ke_protection && cert_sig_protection && dos_prevention && certificate_storage;
    }
    bool operator==(const VerdictMap &) const = default;
};

struct ScenarioReport {
    std::string scenario;
    std::string variant;
    std::uint64_t seed = 0;
    std::string suite;
    std::string dh_group;
    std::uint8_t cipher_algorithm_id = 0;
    std::map<std::string, protocol::Counters> counters;  // per principal
    std::vector<PairResult> pairs;
    std::vector<Finding> observer_findings;
    std::vector<FailureRecord> failure_trace;
    std::vector<WireRecord> wire;
    std::vector<TraceRecord> trace;
    Evidence evidence;
    NetworkStats network;
    VerdictMap verdicts;
};

ScenarioReport run_scenario(const ScenarioConfig &config);

// --- adversary primitives -----------------------------------------------------

// XORs one octet.  A payload selector addresses body octet byte_index of
// the first cleartext payload of that type; a raw offset addresses
// raw_offset + byte_index.  SelectorMiss when the payload is not in the
// cleartext chain or the octet lies past the end.  The header length is
// untouched, so the result still frames correctly.
Bytes tamper_in_flight(ByteView msg, const TamperSelector &selector, std::size_t byte_index,
                       std::uint8_t xor_value);

// Raw offsets of one payload's body octets inside the sealed chain of an
// encrypted message.  Needs the sender's chain key; the simulator uses it
// to aim blind bit flips at SA/KE ciphertext.
std::vector<std::size_t> sealed_body_offsets(ByteView msg, codec::PayloadType type,
                                             const crypto::SymmetricKey &chain_key);

// Payload plaintexts an eavesdropper recovers from one message.  With
// HasKey1AndToken the observer holds a device from the same deployment;
// known_serials lets it open sealed chains that carry no DEV payload
// (message 3) using serials recovered earlier.
std::vector<Finding> observe(ByteView msg, Knowledge knowledge, token::SecurityToken *observer_token = nullptr,
                             std::size_t message_index = 0, const std::vector<Serial> &known_serials = {});

std::string_view knowledge_name(Knowledge k);

// payload types and sizes of a wire message, e.g. "DEV(55) 40B | *sealed 212B"
std::string wire_layout(ByteView message);

// Per-report verdicts: only the columns this report has evidence for.
VerdictMap verdicts_for(const ScenarioReport &report);

// Matrix row from a battery of reports.  Rules:
//   SA/KE protection   every tamper fails before any signature check and no
//                      SA/KE plaintext is observed without keys
//   CERT/SIG protection no CERT/SIG plaintext is observed without keys
//   DoS prevention     forged flood costs the responder zero DH ops
//   certificate storage "device" iff signing went through a token
// IncompleteTrace when the battery lacks flood, tamper, observation or
// signing evidence.
VerdictMap verdicts_from_trace(const std::vector<ScenarioReport> &reports);

} // namespace ikeusb::netsim

#endif
