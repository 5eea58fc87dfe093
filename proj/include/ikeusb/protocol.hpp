// protocol.hpp
//
// IKEv1 phase-1 aggressive mode, signature authentication
//
// Baseline ladder:
//
//   1  I -> R   HDR, SA, KE, Ni, IDii
//   2  R -> I   HDR, SA, KE, Nr, IDir, CERT, SIG_R
//   3  I -> R   HDR, CERT, SIG_I
//
// Token-gated ladder (* = remainder sealed, see codec.hpp):
//
//   1  I -> R   HDR*, DEV(UMi), { SA, KE, Ni, IDii }k_sess(I)
//   2  R -> I   HDR*, DEV(UMr), { SA, KE, Nr, IDir, [CERT]k_ser(R), [SIG_R]k_ser(R) }k_sess(R)
//   3  I -> R   HDR*, { [CERT]k_ser(I), [SIG_I]k_ser(I) }k_sess(I)
//
// UMi/UMr carry the sender's device serial under key1.  k_sess(X) is
// kdf_session(key1, serial_X), k_ser(X) is kdf_serial(serial_X).  The
// responder decrypts UMi before any Diffie-Hellman work; a sender without
// key1 is dropped at that point.

#ifndef IKEUSB_PROTOCOL_HPP
#define IKEUSB_PROTOCOL_HPP

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ikeusb/codec.hpp"
#include "ikeusb/crypto.hpp"
#include "ikeusb/dh.hpp"
#include "ikeusb/token.hpp"

namespace ikeusb::protocol {

enum class Variant { Baseline, Improved };
enum class Role { Initiator, Responder };
enum class State { Idle, Sent1, Sent2, Established, Failed };

// where a handshake stopped
enum class FailStep {
    None,
    NoDevice,    // principal has no security key
    Malformed,   // did not decode, or the wrong payloads
    OutOfOrder,  // message not expected in this state
    Cookie,      // cookies do not match the session
    Dev,         // UMi / UMr did not authenticate under key1
    Replay,      // UMi nonce already seen
    Chain,       // sealed payload chain did not authenticate
    Dh,          // peer public value rejected
    Cert,        // CERT undecryptable, invalid, or bound to someone else
    Sig,         // SIG undecryptable
    SigVerify,   // signature does not verify over HASH_I / HASH_R
};

std::string_view variant_name(Variant v);
std::string_view role_name(Role r);
std::string_view state_name(State s);
std::string_view fail_step_name(FailStep s);
// accepts "baseline" / "improved"; ConfigError otherwise
Variant parse_variant(std::string_view name);

// True for failures the improved responder counts against
// messages_rejected_pre_dh when they happen on message 1.
bool is_pre_dh_step(FailStep s);

struct Counters {
    std::uint64_t dh_ops = 0;    // DH stages: keypair on start, shared on msg2, both on msg1
    std::uint64_t modexps = 0;   // modular exponentiations actually performed
    std::uint64_t sig_verifies = 0;
    std::uint64_t decrypt_failures = 0;
    std::uint64_t messages_rejected_pre_dh = 0;
    std::uint64_t device_ops = 0;  // calls into the security key
    std::uint64_t device_signs = 0;
    std::uint64_t file_signs = 0;

    Counters &operator+=(const Counters &o);
    Counters operator-(const Counters &o) const;
    bool operator==(const Counters &) const = default;
};

struct Failure {
    FailStep step = FailStep::None;
    std::string detail;
};

// One structured record per state-machine step.
struct TransitionEvent {
    Role role;
    State from;
    State to;
    int message = 0;  // ladder message handled or emitted (1..3), 0 if none
    std::string action;  // "start", "recv", "drop"
    Counters delta;
    FailStep step = FailStep::None;
    std::string detail;
};

// Bounded LRU of DEV nonces seen by one responder.  test_and_insert is
// atomic so sessions on different threads may share one cache.
class ReplayCache {
public:
    explicit ReplayCache(std::size_t capacity = 4096);

    // true if nonce was new (and is now recorded)
    bool test_and_insert(ByteView nonce);
    std::size_t size() const;

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<std::string> order_;
    std::unordered_set<std::string> seen_;
};

struct SessionConfig {
    Variant variant = Variant::Baseline;
    std::string identity;
    const crypto::DhGroup *group = &crypto::DhGroup::oakley768();
    token::UsbSlot device;                                    // used by Improved
    std::shared_ptr<const token::FileCredential> credential;  // used by Baseline
    std::shared_ptr<ReplayCache> replay_cache;                // responder, Improved
    std::uint64_t seed = 0;
    Bytes sa_proposal = codec::default_sa_proposal();
    // test hook: when false the improved responder does DH before the gate
    bool dos_gate = true;
};

class HandshakeSession {
public:
    HandshakeSession(Role role, SessionConfig config);

    // Each returns the message to send, or nullopt when nothing goes on
    // the wire (failure, reject, or the end of the ladder).  Failures leave
    // the session in State::Failed with failure() set.
    std::optional<Bytes> initiator_start();
    std::optional<Bytes> responder_on_msg1(ByteView msg);
    std::optional<Bytes> initiator_on_msg2(ByteView msg);
    bool responder_on_msg3(ByteView msg);

    // Dispatch on role and state.  Established and Failed sessions drop
    // further input; anything else unexpected fails the session.
    std::optional<Bytes> receive(ByteView msg);

    Role role() const { return role_; }
    Variant variant() const { return config_.variant; }
    State state() const { return state_; }
    const std::optional<Failure> &failure() const { return failure_; }
    const Counters &counters() const { return counters_; }
    const std::optional<crypto::SkeyidBundle> &skeyid() const { return skeyid_; }
    const std::optional<Serial> &peer_serial() const { return peer_serial_; }
    const codec::Cookie &initiator_cookie() const { return cky_i_; }
    const codec::Cookie &responder_cookie() const { return cky_r_; }
    const std::vector<TransitionEvent> &log() const { return log_; }
    const std::string &identity() const { return config_.identity; }
    // identity the peer proved with its signature
    const std::optional<std::string> &peer_identity() const { return peer_identity_; }

private:
    std::optional<Bytes> start_impl();
    std::optional<Bytes> msg1_impl(ByteView msg);
    std::optional<Bytes> msg2_impl(ByteView msg);
    void msg3_impl(ByteView msg);

    [[noreturn]] void fail(FailStep step, const std::string &detail);
    void record(int message, const std::string &action, const Counters &before, State from);

    Bytes sign(ByteView data);
    token::Certificate own_certificate();
    Bytes device_encrypt(token::KeySelector key, ByteView plaintext);
    Bytes device_decrypt(token::KeySelector key, const std::optional<Serial> &peer, ByteView ct, FailStep step);
    void new_keypair();
    Bytes shared_secret(ByteView peer_public);

    codec::Header header(std::uint8_t flags) const;
    codec::Message decode(ByteView msg);
    void check_cookies(const codec::Header &h, bool expect_responder_cookie);
    token::Certificate check_certificate(ByteView encoded, const codec::IdBody &claimed);
    void verify_signature(const token::Certificate &cert, ByteView hash, ByteView signature);

    Role role_;
    SessionConfig config_;
    State state_ = State::Idle;
    std::optional<Failure> failure_;
    Counters counters_;
    std::vector<TransitionEvent> log_;
    crypto::Drbg rng_;

    codec::Cookie cky_i_{};
    codec::Cookie cky_r_{};
    crypto::DhKeypair dh_;
    Bytes peer_public_;
    Bytes own_nonce_;
    Bytes peer_nonce_;
    Bytes sa_i_;   // SAi_b as the initiator sent it (or the responder received it)
    Bytes sa_r_;   // SAr_b
    Bytes id_i_;   // IDii_b
    Bytes id_r_;   // IDir_b
    std::optional<Serial> own_serial_;
    std::optional<Serial> peer_serial_;
    std::optional<crypto::SkeyidBundle> skeyid_;
    std::optional<std::string> peer_identity_;
};

} // namespace ikeusb::protocol

#endif
