#include "ikeusb/protocol.hpp"
#include "ikeusb/error.hpp"

namespace ikeusb::protocol {

namespace {

// unwinds a step after fail() has recorded the reason
struct StepAbort {};

constexpr std::size_t kNonceLength = 32;

bool terminal(State s) { return s == State::Established || s == State::Failed; }

template <typename T>
const T &expect_body(const codec::Payload &p)
{
    return std::get<T>(p.body);
}

bool has_types(const std::vector<codec::Payload> &payloads, std::initializer_list<codec::PayloadType> types)
{
    if (payloads.size() != types.size())
        return false;
    std::size_t i = 0;
    for (auto t : types)
        if (payloads[i++].type() != t)
            return false;
    return true;
}

std::string describe(const std::vector<codec::Payload> &payloads)
{
    std::string s;
    for (const auto &p : payloads) {
        if (!s.empty())
            s += ",";
        s += codec::payload_name(p.type());
    }
    return s.empty() ? "none" : s;
}

} // namespace

std::string_view variant_name(Variant v) { return v == Variant::Baseline ? "baseline" : "improved"; }

std::string_view role_name(Role r) { return r == Role::Initiator ? "initiator" : "responder"; }

std::string_view state_name(State s)
{
    switch (s) {
    case State::Idle: return "Idle";
    case State::Sent1: return "Sent1";
    case State::Sent2: return "Sent2";
    case State::Established: return "Established";
    case State::Failed: return "Failed";
    }
    return "?";
}

std::string_view fail_step_name(FailStep s)
{
    switch (s) {
    case FailStep::None: return "none";
    case FailStep::NoDevice: return "no-device";
    case FailStep::Malformed: return "malformed";
    case FailStep::OutOfOrder: return "out-of-order";
    case FailStep::Cookie: return "cookie";
    case FailStep::Dev: return "dev";
    case FailStep::Replay: return "replay";
    case FailStep::Chain: return "chain";
    case FailStep::Dh: return "dh";
    case FailStep::Cert: return "cert";
    case FailStep::Sig: return "sig";
    case FailStep::SigVerify: return "sig-verify";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    if (name == "baseline")
        return Variant::Baseline;
    if (name == "improved")
        return Variant::Improved;
    throw Error(Errc::ConfigError, "unknown variant '" + std::string(name) + "'");
}

bool is_pre_dh_step(FailStep s)
{
    switch (s) {
    case FailStep::NoDevice:
    case FailStep::Malformed:
    case FailStep::Cookie:
    case FailStep::Dev:
    case FailStep::Replay:
    case FailStep::Chain:
    case FailStep::Dh:
        return true;
    default:
        return false;
    }
}

Counters &Counters::operator+=(const Counters &o)
{
    dh_ops += o.dh_ops;
    modexps += o.modexps;
    sig_verifies += o.sig_verifies;
    decrypt_failures += o.decrypt_failures;
    messages_rejected_pre_dh += o.messages_rejected_pre_dh;
    device_ops += o.device_ops;
    device_signs += o.device_signs;
    file_signs += o.file_signs;
    return *this;
}

Counters Counters::operator-(const Counters &o) const
{
    Counters d;
    d.dh_ops = dh_ops - o.dh_ops;
    d.modexps = modexps - o.modexps;
    d.sig_verifies = sig_verifies - o.sig_verifies;
    d.decrypt_failures = decrypt_failures - o.decrypt_failures;
    d.messages_rejected_pre_dh = messages_rejected_pre_dh - o.messages_rejected_pre_dh;
    d.device_ops = device_ops - o.device_ops;
    d.device_signs = device_signs - o.device_signs;
    d.file_signs = file_signs - o.file_signs;
    return d;
}

// --- ReplayCache --------------------------------------------------------------

ReplayCache::ReplayCache(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

bool ReplayCache::test_and_insert(ByteView nonce)
{
    std::string key(nonce.begin(), nonce.end());
    std::lock_guard lock(mutex_);
    if (seen_.contains(key))
        return false;
    if (order_.size() == capacity_) {
        seen_.erase(order_.front());
        order_.pop_front();
    }
    order_.push_back(key);
    seen_.insert(std::move(key));
    return true;
}

std::size_t ReplayCache::size() const
{
    std::lock_guard lock(mutex_);
    return order_.size();
}

// --- HandshakeSession -----------------------------------------------------------

HandshakeSession::HandshakeSession(Role role, SessionConfig config)
    : role_(role), config_(std::move(config)), rng_(config_.seed, "session")
{
    if (config_.group == nullptr)
        throw std::invalid_argument("session needs a DH group");
    if (config_.identity.empty())
        throw std::invalid_argument("session needs an identity");
    if (config_.variant == Variant::Baseline && !config_.credential)
        throw std::invalid_argument("baseline session needs a file credential");
}

void HandshakeSession::fail(FailStep step, const std::string &detail)
{
    state_ = State::Failed;
    failure_ = Failure{step, detail};
    throw StepAbort{};
}

void HandshakeSession::record(int message, const std::string &action, const Counters &before, State from)
{
    TransitionEvent ev;
    ev.role = role_;
    ev.from = from;
    ev.to = state_;
    ev.message = message;
    ev.action = action;
    ev.delta = counters_ - before;
    if (state_ == State::Failed && from != State::Failed && failure_) {
        ev.step = failure_->step;
        ev.detail = failure_->detail;
    }
    log_.push_back(std::move(ev));
}

codec::Header HandshakeSession::header(std::uint8_t flags) const
{
    codec::Header h;
    h.initiator_cookie = cky_i_;
    h.responder_cookie = cky_r_;
    h.flags = flags;
    return h;
}

codec::Message HandshakeSession::decode(ByteView msg)
{
    try {
        return codec::decode_message(msg);
    } catch (const Error &e) {
        fail(FailStep::Malformed, e.what());
    }
}

void HandshakeSession::check_cookies(const codec::Header &h, bool expect_responder_cookie)
{
    static const codec::Cookie zero{};
    if (role_ == Role::Responder && state_ == State::Idle) {
        if (h.responder_cookie != zero)
            fail(FailStep::Cookie, "message 1 carries a responder cookie");
        if (h.initiator_cookie == zero)
            fail(FailStep::Cookie, "zero initiator cookie");
        return;
    }
    if (h.initiator_cookie != cky_i_)
        fail(FailStep::Cookie, "initiator cookie mismatch");
    if (expect_responder_cookie && h.responder_cookie != cky_r_)
        fail(FailStep::Cookie, "responder cookie mismatch");
    if (h.responder_cookie == zero)
        fail(FailStep::Cookie, "zero responder cookie");
}

Bytes HandshakeSession::sign(ByteView data)
{
    if (config_.variant == Variant::Improved) {
        ++counters_.device_ops;
        ++counters_.device_signs;
        try {
            return token::device_sign(config_.device, data);
        } catch (const Error &e) {
            fail(FailStep::NoDevice, e.what());
        }
    }
    ++counters_.file_signs;
    return config_.credential->sign(data);
}

token::Certificate HandshakeSession::own_certificate()
{
    if (config_.variant == Variant::Improved) {
        ++counters_.device_ops;
        try {
            return token::device_get_certificate(config_.device);
        } catch (const Error &e) {
            fail(FailStep::NoDevice, e.what());
        }
    }
    return config_.credential->certificate();
}

Bytes HandshakeSession::device_encrypt(token::KeySelector key, ByteView plaintext)
{
    ++counters_.device_ops;
    try {
        return token::device_encrypt(config_.device, key, plaintext);
    } catch (const Error &e) {
        fail(FailStep::NoDevice, e.what());
    }
}

Bytes HandshakeSession::device_decrypt(token::KeySelector key, const std::optional<Serial> &peer, ByteView ct,
                                       FailStep step)
{
    ++counters_.device_ops;
    try {
        return token::device_decrypt(config_.device, key, peer, ct);
    } catch (const Error &e) {
        if (e.code() == Errc::DeviceAbsent)
            fail(FailStep::NoDevice, e.what());
        ++counters_.decrypt_failures;
        fail(step, e.what());
    }
}

void HandshakeSession::new_keypair()
{
    dh_ = crypto::dh_keypair(*config_.group, rng_);
    ++counters_.modexps;
}

Bytes HandshakeSession::shared_secret(ByteView peer_public)
{
    try {
        Bytes s = crypto::dh_shared(*config_.group, dh_.secret, peer_public);
        ++counters_.modexps;
        return s;
    } catch (const Error &e) {
        fail(FailStep::Dh, e.what());
    }
}

token::Certificate HandshakeSession::check_certificate(ByteView encoded, const codec::IdBody &claimed)
{
    token::Certificate cert;
    try {
        cert = token::Certificate::decode(encoded);
    } catch (const Error &e) {
        fail(FailStep::Cert, e.what());
    }
    if (cert.subject != std::string(claimed.identity.begin(), claimed.identity.end()))
        fail(FailStep::Cert, "certificate subject '" + cert.subject + "' does not match the ID payload");
    if (config_.variant == Variant::Improved && (!peer_serial_ || cert.serial_binding != *peer_serial_))
        fail(FailStep::Cert, "certificate is bound to a different device");
    return cert;
}

void HandshakeSession::verify_signature(const token::Certificate &cert, ByteView hash, ByteView signature)
{
    ++counters_.sig_verifies;
    if (!crypto::verify(cert.public_key, hash, signature))
        fail(FailStep::SigVerify, "signature from '" + cert.subject + "' does not verify");
    peer_identity_ = cert.subject;
}

// --- message 1 ----------------------------------------------------------------

std::optional<Bytes> HandshakeSession::initiator_start()
{
    if (terminal(state_)) {
        record(0, "drop", counters_, state_);
        return std::nullopt;
    }
    const State from = state_;
    const Counters before = counters_;
    std::optional<Bytes> out;
    try {
        if (role_ != Role::Initiator || state_ != State::Idle)
            fail(FailStep::OutOfOrder, "start is only valid for an idle initiator");
        out = start_impl();
        state_ = State::Sent1;
    } catch (const StepAbort &) {
        out.reset();
    }
    record(1, "start", before, from);
    return out;
}

std::optional<Bytes> HandshakeSession::start_impl()
{
    const bool improved = config_.variant == Variant::Improved;
    if (improved) {
        ++counters_.device_ops;
        try {
            own_serial_ = token::device_get_serial(config_.device);
        } catch (const Error &) {
            fail(FailStep::NoDevice, "negotiation stopped: no device");
        }
    }

    rng_.fill(cky_i_);
    new_keypair();
    ++counters_.dh_ops;
    own_nonce_ = rng_.bytes(kNonceLength);

    codec::IdBody id{codec::kIdUserFqdn, to_bytes(config_.identity)};
    sa_i_ = config_.sa_proposal;
    id_i_ = codec::encode_payload_body(id);

    std::vector<codec::Payload> chain = {
        {0, codec::SaBody{sa_i_}},
        {0, codec::KeBody{dh_.public_value}},
        {0, codec::NonceBody{own_nonce_}},
        {0, id},
    };
    codec::link_chain(chain);

    codec::Message m;
    if (!improved) {
        m.header = header(0);
        m.payloads = std::move(chain);
    } else {
        m.header = header(codec::kFlagEncrypted);
        Bytes umi = device_encrypt(token::KeySelector::Key1, view(*own_serial_));
        m.payloads.push_back({0, codec::DevBody::from_sealed(umi)});
        m.encrypted_chain = device_encrypt(token::KeySelector::OwnSession, codec::encode_chain(chain));
    }
    codec::link_chain(m.header, m.payloads);
    return codec::encode_message(m);
}

std::optional<Bytes> HandshakeSession::responder_on_msg1(ByteView msg)
{
    if (terminal(state_)) {
        record(1, "drop", counters_, state_);
        return std::nullopt;
    }
    const State from = state_;
    const Counters before = counters_;
    std::optional<Bytes> out;
    try {
        if (role_ != Role::Responder || state_ != State::Idle)
            fail(FailStep::OutOfOrder, "message 1 is only valid for an idle responder");
        out = msg1_impl(msg);
        state_ = State::Sent2;
    } catch (const StepAbort &) {
        out.reset();
        if (from == State::Idle && role_ == Role::Responder && counters_.dh_ops == before.dh_ops)
            ++counters_.messages_rejected_pre_dh;
    }
    record(1, "recv", before, from);
    return out;
}

std::optional<Bytes> HandshakeSession::msg1_impl(ByteView msg)
{
    const bool improved = config_.variant == Variant::Improved;
    codec::Message m = decode(msg);
    check_cookies(m.header, false);
    cky_i_ = m.header.initiator_cookie;

    bool dh_counted = false;
    if (improved && !config_.dos_gate) {
        new_keypair();
        ++counters_.dh_ops;
        dh_counted = true;
    }

    std::vector<codec::Payload> chain;
    if (improved) {
        if (!m.header.encrypted() || m.payloads.size() != 1 || m.payloads[0].type() != codec::PayloadType::Dev)
            fail(FailStep::Dev, "message 1 lacks the DEV payload (have " + describe(m.payloads) + ")");
        if (!config_.device.present())
            fail(FailStep::NoDevice, "responder has no device");
        const auto &dev = expect_body<codec::DevBody>(m.payloads[0]);
        if (dev.format_version != codec::kDevFormatVersion)
            fail(FailStep::Dev, "unknown DEV format version");
        Bytes serial = device_decrypt(token::KeySelector::Key1, std::nullopt, dev.sealed(), FailStep::Dev);
        if (serial.size() != kSerialSize)
            fail(FailStep::Dev, "devinfo record is not 7 octets");
        if (config_.replay_cache && !config_.replay_cache->test_and_insert(view(dev.nonce)))
            fail(FailStep::Replay, "DEV nonce already seen");
        peer_serial_ = token::serial_from_bytes(serial);

        Bytes plain = device_decrypt(token::KeySelector::PeerSession, peer_serial_, *m.encrypted_chain,
                                     FailStep::Chain);
        try {
            chain = codec::decode_chain(plain);
        } catch (const Error &e) {
            fail(FailStep::Malformed, e.what());
        }
    } else {
        if (m.header.encrypted())
            fail(FailStep::Malformed, "encrypted message 1 in baseline mode");
        chain = std::move(m.payloads);
    }

    using codec::PayloadType;
    if (!has_types(chain, {PayloadType::Sa, PayloadType::Ke, PayloadType::Nonce, PayloadType::Id}))
        fail(FailStep::Malformed, "message 1 payloads are " + describe(chain));

    sa_i_ = expect_body<codec::SaBody>(chain[0]).proposal;
    peer_public_ = expect_body<codec::KeBody>(chain[1]).public_value;
    peer_nonce_ = expect_body<codec::NonceBody>(chain[2]).nonce;
    const auto &peer_id = expect_body<codec::IdBody>(chain[3]);
    id_i_ = codec::encode_payload_body(peer_id);
    if (!crypto::dh_public_value_ok(*config_.group, peer_public_))
        fail(FailStep::Dh, "initiator KE outside [2, p-2]");

    if (!dh_counted) {
        new_keypair();
        ++counters_.dh_ops;
    }
    Bytes gxy = shared_secret(peer_public_);

    rng_.fill(cky_r_);
    own_nonce_ = rng_.bytes(kNonceLength);
    codec::IdBody id{codec::kIdUserFqdn, to_bytes(config_.identity)};
    id_r_ = codec::encode_payload_body(id);
    sa_r_ = sa_i_;

    skeyid_ = crypto::derive_skeyid(peer_nonce_, own_nonce_, gxy, view(cky_i_), view(cky_r_));
    Bytes hash_r = crypto::compute_hash_r(skeyid_->skeyid, dh_.public_value, peer_public_, view(cky_r_),
                                          view(cky_i_), sa_i_, id_r_, sa_r_);
    Bytes sig = sign(hash_r);
    token::Certificate cert = own_certificate();

    codec::CertBody cert_body{codec::kCertEncodingToken, cert.encoded};
    codec::SigBody sig_body{sig};
    if (improved) {
        cert_body.data = device_encrypt(token::KeySelector::OwnSerial, cert.encoded);
        sig_body.signature = device_encrypt(token::KeySelector::OwnSerial, sig);
    }

    std::vector<codec::Payload> reply = {
        {0, codec::SaBody{sa_r_}}, {0, codec::KeBody{dh_.public_value}}, {0, codec::NonceBody{own_nonce_}},
        {0, id},                   {0, cert_body},                       {0, sig_body},
    };
    codec::link_chain(reply);

    codec::Message out;
    if (!improved) {
        out.header = header(0);
        out.payloads = std::move(reply);
    } else {
        ++counters_.device_ops;
        own_serial_ = token::device_get_serial(config_.device);
        out.header = header(codec::kFlagEncrypted);
        Bytes umr = device_encrypt(token::KeySelector::Key1, view(*own_serial_));
        out.payloads.push_back({0, codec::DevBody::from_sealed(umr)});
        out.encrypted_chain = device_encrypt(token::KeySelector::OwnSession, codec::encode_chain(reply));
    }
    codec::link_chain(out.header, out.payloads);
    return codec::encode_message(out);
}

// --- message 2 ----------------------------------------------------------------

std::optional<Bytes> HandshakeSession::initiator_on_msg2(ByteView msg)
{
    if (terminal(state_)) {
        record(2, "drop", counters_, state_);
        return std::nullopt;
    }
    const State from = state_;
    const Counters before = counters_;
    std::optional<Bytes> out;
    try {
        if (role_ != Role::Initiator || state_ != State::Sent1)
            fail(FailStep::OutOfOrder, "message 2 is only valid after message 1 was sent");
        out = msg2_impl(msg);
        state_ = State::Established;
    } catch (const StepAbort &) {
        out.reset();
    }
    record(2, "recv", before, from);
    return out;
}

std::optional<Bytes> HandshakeSession::msg2_impl(ByteView msg)
{
    const bool improved = config_.variant == Variant::Improved;
    codec::Message m = decode(msg);
    check_cookies(m.header, false);
    cky_r_ = m.header.responder_cookie;

    std::vector<codec::Payload> chain;
    if (improved) {
        if (!m.header.encrypted() || m.payloads.size() != 1 || m.payloads[0].type() != codec::PayloadType::Dev)
            fail(FailStep::Dev, "message 2 lacks the DEV payload (have " + describe(m.payloads) + ")");
        const auto &dev = expect_body<codec::DevBody>(m.payloads[0]);
        if (dev.format_version != codec::kDevFormatVersion)
            fail(FailStep::Dev, "unknown DEV format version");
        Bytes serial = device_decrypt(token::KeySelector::Key1, std::nullopt, dev.sealed(), FailStep::Dev);
        if (serial.size() != kSerialSize)
            fail(FailStep::Dev, "devinfo record is not 7 octets");
        peer_serial_ = token::serial_from_bytes(serial);

        Bytes plain = device_decrypt(token::KeySelector::PeerSession, peer_serial_, *m.encrypted_chain,
                                     FailStep::Chain);
        try {
            chain = codec::decode_chain(plain);
        } catch (const Error &e) {
            fail(FailStep::Malformed, e.what());
        }
    } else {
        if (m.header.encrypted())
            fail(FailStep::Malformed, "encrypted message 2 in baseline mode");
        chain = std::move(m.payloads);
    }

    using codec::PayloadType;
    if (!has_types(chain, {PayloadType::Sa, PayloadType::Ke, PayloadType::Nonce, PayloadType::Id,
                           PayloadType::Cert, PayloadType::Sig}))
        fail(FailStep::Malformed, "message 2 payloads are " + describe(chain));

    sa_r_ = expect_body<codec::SaBody>(chain[0]).proposal;
    peer_public_ = expect_body<codec::KeBody>(chain[1]).public_value;
    peer_nonce_ = expect_body<codec::NonceBody>(chain[2]).nonce;
    const auto &peer_id = expect_body<codec::IdBody>(chain[3]);
    id_r_ = codec::encode_payload_body(peer_id);
    Bytes cert_bytes = expect_body<codec::CertBody>(chain[4]).data;
    Bytes sig = expect_body<codec::SigBody>(chain[5]).signature;

    if (improved) {
        cert_bytes = device_decrypt(token::KeySelector::PeerSerial, peer_serial_, cert_bytes, FailStep::Cert);
        sig = device_decrypt(token::KeySelector::PeerSerial, peer_serial_, sig, FailStep::Sig);
    }
    token::Certificate cert = check_certificate(cert_bytes, peer_id);

    Bytes gxy = shared_secret(peer_public_);
    ++counters_.dh_ops;
    auto bundle = crypto::derive_skeyid(own_nonce_, peer_nonce_, gxy, view(cky_i_), view(cky_r_));
    Bytes hash_r = crypto::compute_hash_r(bundle.skeyid, peer_public_, dh_.public_value, view(cky_r_),
                                          view(cky_i_), sa_i_, id_r_, sa_r_);
    verify_signature(cert, hash_r, sig);
    skeyid_ = std::move(bundle);

    Bytes hash_i = crypto::compute_hash_i(skeyid_->skeyid, dh_.public_value, peer_public_, view(cky_i_),
                                          view(cky_r_), sa_i_, id_i_);
    Bytes sig_i = sign(hash_i);
    token::Certificate own = own_certificate();

    codec::CertBody cert_body{codec::kCertEncodingToken, own.encoded};
    codec::SigBody sig_body{sig_i};
    if (improved) {
        cert_body.data = device_encrypt(token::KeySelector::OwnSerial, own.encoded);
        sig_body.signature = device_encrypt(token::KeySelector::OwnSerial, sig_i);
    }
    std::vector<codec::Payload> reply = {{0, cert_body}, {0, sig_body}};
    codec::link_chain(reply);

    codec::Message out;
    if (!improved) {
        out.header = header(0);
        out.payloads = std::move(reply);
    } else {
        out.header = header(codec::kFlagEncrypted);
        out.encrypted_chain = device_encrypt(token::KeySelector::OwnSession, codec::encode_chain(reply));
    }
    codec::link_chain(out.header, out.payloads);
    return codec::encode_message(out);
}

// --- message 3 ----------------------------------------------------------------

bool HandshakeSession::responder_on_msg3(ByteView msg)
{
    if (terminal(state_)) {
        record(3, "drop", counters_, state_);
        return state_ == State::Established;
    }
    const State from = state_;
    const Counters before = counters_;
    try {
        if (role_ != Role::Responder || state_ != State::Sent2)
            fail(FailStep::OutOfOrder, "message 3 is only valid after message 2 was sent");
        msg3_impl(msg);
        state_ = State::Established;
    } catch (const StepAbort &) {
    }
    record(3, "recv", before, from);
    return state_ == State::Established;
}

void HandshakeSession::msg3_impl(ByteView msg)
{
    const bool improved = config_.variant == Variant::Improved;
    codec::Message m = decode(msg);
    check_cookies(m.header, true);

    std::vector<codec::Payload> chain;
    if (improved) {
        if (!m.header.encrypted() || !m.payloads.empty())
            fail(FailStep::Malformed, "message 3 must be a single sealed chain");
        Bytes plain = device_decrypt(token::KeySelector::PeerSession, peer_serial_, *m.encrypted_chain,
                                     FailStep::Chain);
        try {
            chain = codec::decode_chain(plain);
        } catch (const Error &e) {
            fail(FailStep::Malformed, e.what());
        }
    } else {
        if (m.header.encrypted())
            fail(FailStep::Malformed, "encrypted message 3 in baseline mode");
        chain = std::move(m.payloads);
    }

    using codec::PayloadType;
    if (!has_types(chain, {PayloadType::Cert, PayloadType::Sig}))
        fail(FailStep::Malformed, "message 3 payloads are " + describe(chain));

    Bytes cert_bytes = expect_body<codec::CertBody>(chain[0]).data;
    Bytes sig = expect_body<codec::SigBody>(chain[1]).signature;
    if (improved) {
        cert_bytes = device_decrypt(token::KeySelector::PeerSerial, peer_serial_, cert_bytes, FailStep::Cert);
        sig = device_decrypt(token::KeySelector::PeerSerial, peer_serial_, sig, FailStep::Sig);
    }

    codec::IdBody claimed;
    claimed.id_type = id_i_.empty() ? 0 : id_i_[0];
    claimed.identity.assign(id_i_.begin() + (id_i_.empty() ? 0 : 1), id_i_.end());
    token::Certificate cert = check_certificate(cert_bytes, claimed);

    Bytes hash_i = crypto::compute_hash_i(skeyid_->skeyid, peer_public_, dh_.public_value, view(cky_i_),
                                          view(cky_r_), sa_i_, id_i_);
    verify_signature(cert, hash_i, sig);
}

// --- dispatch -------------------------------------------------------------------

std::optional<Bytes> HandshakeSession::receive(ByteView msg)
{
    if (role_ == Role::Initiator) {
        if (state_ == State::Idle) {
            const Counters before = counters_;
            try {
                fail(FailStep::OutOfOrder, "initiator received a message before starting");
            } catch (const StepAbort &) {
            }
            record(0, "recv", before, State::Idle);
            return std::nullopt;
        }
        return initiator_on_msg2(msg);
    }
    if (state_ == State::Sent2 || state_ == State::Established) {
        responder_on_msg3(msg);
        return std::nullopt;
    }
    return responder_on_msg1(msg);
}

} // namespace ikeusb::protocol
