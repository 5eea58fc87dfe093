#include "ikeusb/netsim.hpp"
#include "ikeusb/dh.hpp"
#include "ikeusb/error.hpp"

#include <algorithm>
#include <deque>
#include <memory>

namespace ikeusb::netsim {

namespace {

using protocol::HandshakeSession;
using protocol::Role;
using protocol::State;

constexpr std::uint32_t kAdversaryAddress = 0xadad0000;
constexpr std::size_t kNoHandshake = static_cast<std::size_t>(-1);

Serial derived_serial(const std::string &name)
{
    Serial s{};
    s.fill('0');
    std::size_t i = 0;
    for (char c : name) {
        if (i == s.size())
            break;
        if (std::isalnum(static_cast<unsigned char>(c)))
            s[i++] = static_cast<std::uint8_t>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
}

struct Packet {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    Bytes bytes;
    std::size_t handshake = kNoHandshake;
    int message = 0;
    bool injected = false;
    bool replay = false;
};

struct SessionEntry {
    std::unique_ptr<HandshakeSession> session;
    bool injected = false;
    std::size_t handshake = kNoHandshake;
    std::size_t log_consumed = 0;
};

struct Node {
    PrincipalConfig config;
    Serial serial{};
    token::UsbSlot slot;
    std::shared_ptr<token::FileCredential> credential;
    std::shared_ptr<protocol::ReplayCache> replay_cache;
    std::vector<SessionEntry> sessions;
    std::uint64_t session_counter = 0;
};

struct PendingReplay {
    Packet packet;
    std::size_t countdown;
};

class Simulation {
public:
    explicit Simulation(const ScenarioConfig &config);
    ScenarioReport run();

private:
    Node &node(const std::string &name);
    Node *node_at(std::uint32_t address);
    std::uint64_t next_session_seed(Node &n);
    protocol::SessionConfig session_config(Node &n);

    void inject_flood(const FloodAction &flood);
    Bytes forged_msg1(std::size_t i);
    void start_handshakes();
    void deliver(Packet packet);
    void maybe_tamper(Packet &packet, bool &tampered);
    void harvest(Node &n, SessionEntry &entry);
    std::uint64_t sig_verifies_total() const;
    void finish(ScenarioReport &report);

    const ScenarioConfig &config_;
    token::DeploymentConfig deployment_;
    const crypto::DhGroup &group_;
    crypto::Drbg adversary_rng_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::deque<Packet> queue_;
    std::vector<PendingReplay> replays_;
    std::shared_ptr<token::SecurityToken> observer_token_;
    std::vector<Serial> observer_serials_;
    std::vector<Bytes> certificates_;
    ScenarioReport report_;
    std::size_t seq_ = 0;
    bool tamper_done_ = false;
    std::vector<bool> replay_done_;
};

Simulation::Simulation(const ScenarioConfig &config)
    : config_(config), group_(crypto::DhGroup::by_name(config.dh_group)),
      adversary_rng_(config.seed, "adversary")
{
    validate(config);
    deployment_ = token::DeploymentConfig::from_seed(config.seed);
    if (config.key1)
        deployment_.key1 = *config.key1;
    deployment_.cipher = config.cipher;
    deployment_.signature_scheme = config.signature_scheme;

    std::vector<Serial> serials;
    for (const auto &p : config.principals) {
        auto n = std::make_unique<Node>();
        n->config = p;
        n->serial = p.serial ? *p.serial : derived_serial(p.name);
        if (std::find(serials.begin(), serials.end(), n->serial) != serials.end())
            throw Error(Errc::ConfigError, "two principals share serial " + token::serial_to_string(n->serial));
        serials.push_back(n->serial);
        if (p.has_token) {
            n->slot = token::UsbSlot(token::create_token(view(n->serial), deployment_, p.name));
            certificates_.push_back(n->slot.device().certificate().encoded);
        }
        crypto::Drbg file_rng(config.seed, "file-credential:" + p.name);
        n->credential = std::make_shared<token::FileCredential>(p.name, file_rng);
        certificates_.push_back(n->credential->certificate().encoded);
        n->replay_cache = std::make_shared<protocol::ReplayCache>();
        nodes_.push_back(std::move(n));
    }

    // the eavesdropper's own device, used only with Knowledge::HasKey1AndToken
    Serial observer_serial = token::serial_from_string("OBSRVR1");
    observer_token_ = token::create_token(view(observer_serial), deployment_, "observer");

    replay_done_.assign(config.adversary.size(), false);
}

Node &Simulation::node(const std::string &name)
{
    for (auto &n : nodes_)
        if (n->config.name == name)
            return *n;
    throw Error(Errc::ConfigError, "unknown principal '" + name + "'");
}

Node *Simulation::node_at(std::uint32_t address)
{
    for (auto &n : nodes_)
        if (n->config.address == address)
            return n.get();
    return nullptr;
}

std::uint64_t Simulation::next_session_seed(Node &n)
{
    crypto::Drbg rng(config_.seed, "session:" + n.config.name + ":" + std::to_string(n.session_counter++));
    return rng.next_u64();
}

protocol::SessionConfig Simulation::session_config(Node &n)
{
    protocol::SessionConfig sc;
    sc.variant = config_.variant;
    sc.identity = n.config.name;
    sc.group = &group_;
    sc.device = n.slot;
    sc.credential = n.credential;
    sc.replay_cache = n.replay_cache;
    sc.seed = next_session_seed(n);
    sc.dos_gate = config_.dos_gate;
    return sc;
}

Bytes Simulation::forged_msg1(std::size_t i)
{
    codec::Message m;
    adversary_rng_.fill(m.header.initiator_cookie);
    m.header.initiator_cookie[0] |= 0x80;

    // a KE value in [2, p-2] without doing any exponentiation
    Bytes ke;
    do {
        ke = adversary_rng_.bytes(group_.width());
        if (ke.size() > 1)
            ke[0] &= 0x7f;
    } while (!crypto::dh_public_value_ok(group_, ke));

    std::vector<codec::Payload> chain = {
        {0, codec::SaBody{codec::default_sa_proposal()}},
        {0, codec::KeBody{ke}},
        {0, codec::NonceBody{adversary_rng_.bytes(32)}},
        {0, codec::IdBody{codec::kIdUserFqdn, to_bytes("spoofed-" + std::to_string(i))}},
    };
    codec::link_chain(chain);

    if (config_.variant == protocol::Variant::Baseline) {
        m.payloads = std::move(chain);
    } else {
        // strongest forgery without key1: well-formed DEV under a random key
        const crypto::Aead &aead = crypto::aead_by_id(config_.cipher);
        auto guess = crypto::SymmetricKey::from(adversary_rng_.bytes(crypto::kKeySize));
        Bytes serial = adversary_rng_.bytes(kSerialSize);
        m.header.flags = codec::kFlagEncrypted;
        m.payloads.push_back({0, codec::DevBody::from_sealed(crypto::seal_blob(aead, guess, serial, adversary_rng_))});
        m.encrypted_chain = codec::encrypt_payload_chain(guess, chain, adversary_rng_, aead);
    }
    codec::link_chain(m.header, m.payloads);
    return codec::encode_message(m);
}

void Simulation::inject_flood(const FloodAction &flood)
{
    Node &target = node(flood.target);
    for (std::size_t i = 0; i < flood.count; ++i) {
        Packet p;
        p.dst = target.config.address;
        if (flood.forge_source) {
            do {
                p.src = 0x0a000000u + static_cast<std::uint32_t>(adversary_rng_.uniform(1u << 24));
            } while (node_at(p.src) != nullptr);
        } else {
            p.src = kAdversaryAddress;
        }
        if (flood.msg_template == "garbage")
            p.bytes = adversary_rng_.bytes(adversary_rng_.uniform(121));
        else
            p.bytes = forged_msg1(i);
        p.injected = true;
        queue_.push_back(std::move(p));
        ++report_.evidence.flood_sent;
    }
}

void Simulation::start_handshakes()
{
    for (std::size_t h = 0; h < config_.handshakes.size(); ++h) {
        Node &init = node(config_.handshakes[h].initiator);
        Node &resp = node(config_.handshakes[h].responder);
        SessionEntry entry;
        entry.session = std::make_unique<HandshakeSession>(Role::Initiator, session_config(init));
        entry.handshake = h;
        auto msg = entry.session->initiator_start();
        init.sessions.push_back(std::move(entry));
        harvest(init, init.sessions.back());
        if (msg) {
            Packet p;
            p.src = init.config.address;
            p.dst = resp.config.address;
            p.bytes = std::move(*msg);
            p.handshake = h;
            p.message = 1;
            queue_.push_back(std::move(p));
        }
    }
}

std::uint64_t Simulation::sig_verifies_total() const
{
    std::uint64_t total = 0;
    for (const auto &n : nodes_)
        for (const auto &s : n->sessions)
            total += s.session->counters().sig_verifies;
    return total;
}

void Simulation::harvest(Node &n, SessionEntry &entry)
{
    const auto &log = entry.session->log();
    for (; entry.log_consumed < log.size(); ++entry.log_consumed) {
        const auto &ev = log[entry.log_consumed];
        TraceRecord t;
        t.seq = seq_++;
        t.principal = n.config.name;
        t.role = std::string(protocol::role_name(ev.role));
        t.action = ev.action;
        t.message = ev.message;
        t.from = std::string(protocol::state_name(ev.from));
        t.to = std::string(protocol::state_name(ev.to));
        t.delta = ev.delta;
        t.step = std::string(protocol::fail_step_name(ev.step));
        t.detail = ev.detail;
        if (ev.step != protocol::FailStep::None) {
            FailureRecord f;
            f.seq = t.seq;
            f.principal = t.principal;
            f.role = t.role;
            f.message = ev.message;
            f.step = t.step;
            f.detail = ev.detail;
            f.injected = entry.injected;
            f.sig_verifies_total = sig_verifies_total();
            report_.failure_trace.push_back(std::move(f));
        }
        report_.trace.push_back(std::move(t));
    }
}

void Simulation::maybe_tamper(Packet &packet, bool &tampered)
{
    if (tamper_done_ || packet.handshake != 0 || packet.replay)
        return;
    for (const auto &action : config_.adversary) {
        const auto *t = std::get_if<TamperAction>(&action);
        if (t == nullptr || t->message != packet.message)
            continue;
        tamper_done_ = true;
        std::string target = t->selector.payload ? std::string(codec::payload_name(*t->selector.payload)) : "raw";
        try {
            packet.bytes = tamper_in_flight(packet.bytes, t->selector, t->byte_index, t->xor_value);
            tampered = true;
        } catch (const Error &e) {
            if (e.code() != Errc::SelectorMiss || !t->selector.payload)
                throw;
            // Payload sealed: aim at the ciphertext octet that covers the
            // selected plaintext octet.  The harness knows the sender's
            // chain key; the flip itself is blind.
            Node *sender = node_at(packet.src);
            if (sender == nullptr || !codec::encrypted_chain_offset(packet.bytes))
                throw;
            auto key = crypto::kdf_session(deployment_.key1, view(sender->serial));
            auto offsets = sealed_body_offsets(packet.bytes, *t->selector.payload, key);
            if (t->byte_index >= offsets.size())
                throw Error(Errc::SelectorMiss, "byte index past the sealed payload");
            packet.bytes[offsets[t->byte_index]] ^= t->xor_value;
            tampered = true;
            target += "(sealed)";
        }
        ++report_.evidence.tamper_applied;
        report_.evidence.tamper_targets.push_back(target);
        ++report_.network.tampered;
        return;
    }
}

void Simulation::deliver(Packet packet)
{
    bool tampered = false;
    maybe_tamper(packet, tampered);

    const std::size_t index = report_.wire.size();
    Node *src = node_at(packet.src);
    Node *dst = node_at(packet.dst);

    WireRecord w;
    w.index = index;
    w.from = src ? src->config.name : "spoofed:" + std::to_string(packet.src);
    w.to = dst ? dst->config.name : "unknown:" + std::to_string(packet.dst);
    w.message = packet.message;
    w.injected = packet.injected;
    w.tampered = tampered;
    w.size = packet.bytes.size();
    w.layout = wire_layout(packet.bytes);
    report_.wire.push_back(w);
    ++report_.network.sent;

    for (const auto &action : config_.adversary) {
        if (const auto *o = std::get_if<ObserveAction>(&action)) {
            auto found = observe(packet.bytes, o->knowledge, observer_token_.get(), index, observer_serials_);
            for (auto &f : found) {
                if (f.payload == "serial") {
                    Serial s = token::serial_from_bytes(from_hex(f.hex));
                    if (std::find(observer_serials_.begin(), observer_serials_.end(), s) == observer_serials_.end())
                        observer_serials_.push_back(s);
                }
                if (o->knowledge == Knowledge::None) {
                    ++report_.evidence.observed_none_findings;
                    if (f.payload == "SA" || f.payload == "KE")
                        ++report_.evidence.observed_sa_ke_findings;
                    if (f.payload == "CERT" || f.payload == "SIG")
                        ++report_.evidence.observed_cert_sig_findings;
                }
                report_.observer_findings.push_back(std::move(f));
            }
            if (o->knowledge == Knowledge::None) {
                ++report_.evidence.observed_messages;
                for (const auto &cert : certificates_)
                    if (contains_subsequence(packet.bytes, cert))
                        report_.evidence.plaintext_cert_on_wire = true;
            }
        }
    }

    for (std::size_t i = 0; i < config_.adversary.size(); ++i) {
        const auto *r = std::get_if<ReplayAction>(&config_.adversary[i]);
        if (r && !replay_done_[i] && packet.handshake == 0 && !packet.replay && packet.message == r->message) {
            replay_done_[i] = true;
            Packet copy = packet;
            copy.replay = true;
            copy.injected = true;
            copy.handshake = kNoHandshake;
            replays_.push_back({std::move(copy), r->delay});
        }
    }

    if (dst == nullptr) {
        ++report_.network.undeliverable;
        return;
    }
    ++report_.network.delivered;

    codec::Cookie icky{}, rcky{};
    if (packet.bytes.size() >= 16) {
        std::copy_n(packet.bytes.begin(), 8, icky.begin());
        std::copy_n(packet.bytes.begin() + 8, 8, rcky.begin());
    }
    static const codec::Cookie zero{};

    SessionEntry *entry = nullptr;
    for (auto &s : dst->sessions) {
        const auto &sess = *s.session;
        if (sess.role() == Role::Initiator && sess.initiator_cookie() == icky) {
            entry = &s;
            break;
        }
        if (sess.role() == Role::Responder && rcky != zero && sess.initiator_cookie() == icky &&
            sess.responder_cookie() == rcky) {
            entry = &s;
            break;
        }
    }
    if (entry == nullptr) {
        if (rcky != zero) {
            TraceRecord t;
            t.seq = seq_++;
            t.principal = dst->config.name;
            t.action = "unroutable";
            t.message = packet.message;
            report_.trace.push_back(std::move(t));
            return;
        }
        SessionEntry fresh;
        fresh.session = std::make_unique<HandshakeSession>(Role::Responder, session_config(*dst));
        fresh.injected = packet.injected;
        fresh.handshake = packet.handshake;
        dst->sessions.push_back(std::move(fresh));
        entry = &dst->sessions.back();
    }

    auto reply = entry->session->receive(packet.bytes);
    harvest(*dst, *entry);
    if (reply) {
        Packet out;
        out.src = dst->config.address;
        out.dst = packet.src;
        out.bytes = std::move(*reply);
        out.handshake = entry->handshake;
        out.message = packet.message + 1;
        out.injected = entry->injected;
        queue_.push_back(std::move(out));
    }
}

void Simulation::finish(ScenarioReport &r)
{
    for (const auto &n : nodes_) {
        protocol::Counters total;
        for (const auto &s : n->sessions) {
            total += s.session->counters();
            if (s.injected && s.session->role() == Role::Responder) {
                r.evidence.flood_dh_ops += s.session->counters().dh_ops;
                r.evidence.flood_rejected_pre_dh += s.session->counters().messages_rejected_pre_dh;
            }
        }
        r.counters[n->config.name] = total;
        r.evidence.device_signs += total.device_signs;
        r.evidence.file_signs += total.file_signs;
    }

    for (std::size_t h = 0; h < config_.handshakes.size(); ++h) {
        PairResult pr;
        pr.initiator = config_.handshakes[h].initiator;
        pr.responder = config_.handshakes[h].responder;
        const HandshakeSession *is = nullptr;
        const HandshakeSession *rs = nullptr;
        for (const auto &s : node(pr.initiator).sessions)
            if (s.handshake == h && s.session->role() == Role::Initiator)
                is = s.session.get();
        for (const auto &s : node(pr.responder).sessions)
            if (s.handshake == h && s.session->role() == Role::Responder)
                rs = s.session.get();
        pr.initiator_state = is ? std::string(protocol::state_name(is->state())) : "absent";
        pr.responder_state = rs ? std::string(protocol::state_name(rs->state())) : "absent";
        pr.established = is && rs && is->state() == State::Established && rs->state() == State::Established;
        pr.skeyid_match = pr.established && is->skeyid() && rs->skeyid() && *is->skeyid() == *rs->skeyid();
        r.pairs.push_back(pr);
    }

    if (r.evidence.tamper_applied > 0) {
        for (const auto &f : r.failure_trace) {
            if (f.injected)
                continue;
            r.evidence.tamper_detected = true;
            r.evidence.tamper_pre_signature = f.sig_verifies_total == 0;
            r.evidence.tamper_failure_step = f.step;
            break;
        }
    }
    r.verdicts = verdicts_for(r);
}

ScenarioReport Simulation::run()
{
    report_.scenario = config_.name;
    report_.variant = std::string(protocol::variant_name(config_.variant));
    report_.seed = config_.seed;
    report_.suite = std::string(crypto::suite_id());
    report_.dh_group = group_.name;
    report_.cipher_algorithm_id = observer_token_->algorithm_id();

    for (const auto &action : config_.adversary)
        if (const auto *f = std::get_if<FloodAction>(&action))
            inject_flood(*f);
    start_handshakes();

    while (!queue_.empty() || !replays_.empty()) {
        if (queue_.empty()) {
            // nothing else in flight: release the next replay now
            auto it = std::min_element(replays_.begin(), replays_.end(),
                                       [](const auto &a, const auto &b) { return a.countdown < b.countdown; });
            it->countdown = 0;
        } else {
            Packet p = std::move(queue_.front());
            queue_.pop_front();
            deliver(std::move(p));
            for (auto &r : replays_)
                if (r.countdown > 0)
                    --r.countdown;
        }
        for (auto it = replays_.begin(); it != replays_.end();) {
            if (it->countdown == 0) {
                queue_.push_back(std::move(it->packet));
                ++report_.network.replayed;
                it = replays_.erase(it);
            } else {
                ++it;
            }
        }
    }

    finish(report_);
    return std::move(report_);
}

} // namespace

std::string wire_layout(ByteView bytes)
{
    try {
        codec::Message m = codec::decode_message(bytes);
        std::string s;
        auto layout = codec::payload_layout(bytes);
        for (const auto &span : layout) {
            if (!s.empty())
                s += " ";
            s += std::string(codec::payload_name(span.type)) + "(" + std::to_string(static_cast<int>(span.type)) +
                 ") " + std::to_string(span.body_length + codec::kGenericHeaderSize) + "B";
        }
        if (m.encrypted_chain) {
            if (!s.empty())
                s += " | ";
            s += "*sealed " + std::to_string(m.encrypted_chain->size()) + "B";
        }
        return s.empty() ? "empty" : s;
    } catch (const Error &) {
        return "undecodable";
    }
}

std::string_view knowledge_name(Knowledge k) { return k == Knowledge::None ? "none" : "key1+token"; }

ScenarioReport run_scenario(const ScenarioConfig &config)
{
    Simulation sim(config);
    return sim.run();
}

Bytes tamper_in_flight(ByteView msg, const TamperSelector &selector, std::size_t byte_index, std::uint8_t xor_value)
{
    Bytes out(msg.begin(), msg.end());
    std::size_t position = 0;
    if (selector.raw_offset) {
        position = *selector.raw_offset + byte_index;
    } else if (selector.payload) {
        std::vector<codec::PayloadSpan> layout;
        try {
            layout = codec::payload_layout(msg);
        } catch (const Error &e) {
            throw Error(Errc::SelectorMiss, std::string("message does not decode: ") + e.what());
        }
        auto it = std::find_if(layout.begin(), layout.end(),
                               [&](const codec::PayloadSpan &s) { return s.type == *selector.payload; });
        if (it == layout.end())
            throw Error(Errc::SelectorMiss,
                        std::string(codec::payload_name(*selector.payload)) + " is not in the cleartext chain");
        if (byte_index >= it->body_length)
            throw Error(Errc::SelectorMiss, "byte index past the payload body");
        position = it->body_offset + byte_index;
    } else {
        throw Error(Errc::SelectorMiss, "empty selector");
    }
    if (position >= out.size())
        throw Error(Errc::SelectorMiss, "offset " + std::to_string(position) + " past the message end");
    out[position] ^= xor_value;
    return out;
}

std::vector<std::size_t> sealed_body_offsets(ByteView msg, codec::PayloadType type,
                                             const crypto::SymmetricKey &chain_key)
{
    auto blob_offset = codec::encrypted_chain_offset(msg);
    if (!blob_offset)
        throw Error(Errc::SelectorMiss, "message has no sealed chain");
    Bytes plain = crypto::open_blob(crypto::default_aead(), chain_key, msg.subspan(*blob_offset));
    auto layout = codec::chain_layout(plain);
    auto it = std::find_if(layout.begin(), layout.end(), [&](const codec::PayloadSpan &s) { return s.type == type; });
    if (it == layout.end())
        throw Error(Errc::SelectorMiss, std::string(codec::payload_name(type)) + " is not in the sealed chain");
    // the cipher is a stream mode: plaintext octet k sits at nonce + k
    std::vector<std::size_t> offsets;
    for (std::size_t k = 0; k < it->body_length; ++k)
        offsets.push_back(*blob_offset + crypto::kNonceSize + it->body_offset + k);
    return offsets;
}

std::vector<Finding> observe(ByteView msg, Knowledge knowledge, token::SecurityToken *observer_token,
                             std::size_t message_index, const std::vector<Serial> &known_serials)
{
    std::vector<Finding> out;
    const std::string kname(knowledge_name(knowledge));
    auto add = [&](std::string payload, ByteView bytes) {
        out.push_back(Finding{message_index, kname, std::move(payload), to_hex(bytes)});
    };

    codec::Message m;
    try {
        m = codec::decode_message(msg);
    } catch (const Error &) {
        return out;
    }

    std::optional<Serial> sender;
    for (const auto &p : m.payloads) {
        if (const auto *dev = std::get_if<codec::DevBody>(&p.body)) {
            if (knowledge == Knowledge::HasKey1AndToken && observer_token != nullptr) {
                try {
                    Bytes serial = observer_token->decrypt(token::KeySelector::Key1, std::nullopt, dev->sealed());
                    if (serial.size() == kSerialSize) {
                        sender = token::serial_from_bytes(serial);
                        add("serial", serial);
                    }
                } catch (const Error &) {
                }
            }
            continue;
        }
        add(std::string(codec::payload_name(p.type())), codec::encode_payload_body(p.body));
    }

    if (!m.encrypted_chain || knowledge != Knowledge::HasKey1AndToken || observer_token == nullptr)
        return out;

    std::vector<Serial> candidates;
    if (sender)
        candidates.push_back(*sender);
    candidates.insert(candidates.end(), known_serials.begin(), known_serials.end());
    for (const auto &serial : candidates) {
        std::vector<codec::Payload> chain;
        try {
            Bytes plain = observer_token->decrypt(token::KeySelector::PeerSession, serial, *m.encrypted_chain);
            chain = codec::decode_chain(plain);
        } catch (const Error &) {
            continue;
        }
        for (const auto &p : chain) {
            Bytes body = codec::encode_payload_body(p.body);
            if (const auto *cert = std::get_if<codec::CertBody>(&p.body)) {
                try {
                    body = observer_token->decrypt(token::KeySelector::PeerSerial, serial, cert->data);
                } catch (const Error &) {
                }
            } else if (const auto *sig = std::get_if<codec::SigBody>(&p.body)) {
                try {
                    body = observer_token->decrypt(token::KeySelector::PeerSerial, serial, sig->signature);
                } catch (const Error &) {
                }
            }
            add(std::string(codec::payload_name(p.type())), body);
        }
        break;
    }
    return out;
}

VerdictMap verdicts_for(const ScenarioReport &r)
{
    const Evidence &e = r.evidence;
    VerdictMap v;
    if (e.flood_sent > 0)
        v.dos_prevention = e.flood_dh_ops == 0;
    if (e.tamper_applied > 0 || e.observed_messages > 0) {
        bool ok = true;
        if (e.tamper_applied > 0)
            ok = ok && e.tamper_pre_signature;
        if (e.observed_messages > 0)
            ok = ok && e.observed_sa_ke_findings == 0;
        v.sa_ke_protection = ok;
    }
    if (e.observed_messages > 0)
        v.cert_sig_protection = e.observed_cert_sig_findings == 0 && !e.plaintext_cert_on_wire;
    if (e.device_signs + e.file_signs > 0)
        v.certificate_storage = (e.device_signs > 0 && e.file_signs == 0) ? "device" : "file";
    return v;
}

VerdictMap verdicts_from_trace(const std::vector<ScenarioReport> &reports)
{
    bool has_flood = false, has_tamper = false, has_observe = false, has_signs = false;
    bool dos = true, sa_ke = true, cert_sig = true, device = true;
    for (const auto &r : reports) {
        const Evidence &e = r.evidence;
        if (e.flood_sent > 0) {
            has_flood = true;
            dos = dos && e.flood_dh_ops == 0;
        }
        if (e.tamper_applied > 0) {
            has_tamper = true;
            sa_ke = sa_ke && e.tamper_pre_signature;
        }
        if (e.observed_messages > 0) {
            has_observe = true;
            sa_ke = sa_ke && e.observed_sa_ke_findings == 0;
            cert_sig = cert_sig && e.observed_cert_sig_findings == 0 && !e.plaintext_cert_on_wire;
        }
        if (e.device_signs + e.file_signs > 0) {
            has_signs = true;
            device = device && e.device_signs > 0 && e.file_signs == 0;
        }
    }

    std::string missing;
    auto need = [&](bool have, const char *what) {
        if (!have)
            missing += missing.empty() ? what : std::string(", ") + what;
    };
    need(has_flood, "flood");
    need(has_tamper, "tamper");
    need(has_observe, "observe");
    need(has_signs, "signing");
    if (!missing.empty())
        throw Error(Errc::IncompleteTrace, "no evidence for: " + missing);

    VerdictMap v;
    v.sa_ke_protection = sa_ke;
    v.cert_sig_protection = cert_sig;
    v.dos_prevention = dos;
    v.certificate_storage = device ? "device" : "file";
    return v;
}

} // namespace ikeusb::netsim
