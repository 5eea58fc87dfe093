#include "ikeusb/codec.hpp"
#include "ikeusb/error.hpp"

#include <algorithm>

namespace ikeusb::codec {

namespace {

constexpr std::size_t kMaxPayloadLength = 0xffff;

Bytes build_default_sa()
{
    Bytes transform_attrs = {
        0x80, 0x01, 0x00, 0x07,  // encryption algorithm: AES-CBC
        0x80, 0x0e, 0x01, 0x00,  // key length: 256
        0x80, 0x02, 0x00, 0x04,  // hash: SHA2-256
        0x80, 0x03, 0xfd, 0xe9,  // auth method: private 65001 (Ed25519 signature)
        0x80, 0x04, 0x00, 0x01,  // group description: 768-bit MODP
        0x80, 0x0b, 0x00, 0x01,  // life type: seconds
        0x80, 0x0c, 0x70, 0x80,  // life duration: 28800
    };
    Bytes transform;
    append_u8(transform, 0);  // last transform
    append_u8(transform, 0);
    append_u16(transform, static_cast<std::uint16_t>(8 + transform_attrs.size()));
    append_u8(transform, 1);  // transform #
    append_u8(transform, 1);  // KEY_IKE
    append_u16(transform, 0);
    append(transform, transform_attrs);

    Bytes proposal;
    append_u8(proposal, 0);  // last proposal
    append_u8(proposal, 0);
    append_u16(proposal, static_cast<std::uint16_t>(8 + transform.size()));
    append_u8(proposal, 1);  // proposal #
    append_u8(proposal, 1);  // PROTO_ISAKMP
    append_u8(proposal, 0);  // SPI size
    append_u8(proposal, 1);  // # transforms
    append(proposal, transform);

    Bytes sa;
    append_u32(sa, 1);  // DOI: IPsec
    append_u32(sa, 1);  // SIT_IDENTITY_ONLY
    append(sa, proposal);
    return sa;
}

void require_chain(std::uint8_t announced, const std::vector<Payload> &payloads, std::size_t from)
{
    const std::uint8_t expected =
        from < payloads.size() ? static_cast<std::uint8_t>(payloads[from].type()) : std::uint8_t{0};
    if (announced != expected)
        throw Error(Errc::ChainMismatch, "link announces type " + std::to_string(announced) + " but next is " +
                                             std::to_string(expected));
}

void encode_payloads(Bytes &out, const std::vector<Payload> &payloads)
{
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        const Payload &p = payloads[i];
        require_chain(p.next_payload, payloads, i + 1);
        Bytes body = encode_payload_body(p.body);
        if (body.size() + kGenericHeaderSize > kMaxPayloadLength)
            throw Error(Errc::BadLength, "payload body too large");
        append_u8(out, p.next_payload);
        append_u8(out, 0);
        append_u16(out, static_cast<std::uint16_t>(body.size() + kGenericHeaderSize));
        append(out, body);
    }
}

Body decode_body(PayloadType type, ByteView body, std::size_t offset)
{
    switch (type) {
    case PayloadType::Sa:
        return SaBody{Bytes(body.begin(), body.end())};
    case PayloadType::Ke:
        if (body.empty())
            throw Error(Errc::BadLength, offset, "empty KE body");
        return KeBody{Bytes(body.begin(), body.end())};
    case PayloadType::Nonce:
        if (body.size() < kMinNonce || body.size() > kMaxNonce)
            throw Error(Errc::BadLength, offset, "nonce length " + std::to_string(body.size()) + " outside [8, 256]");
        return NonceBody{Bytes(body.begin(), body.end())};
    case PayloadType::Id:
        if (body.empty())
            throw Error(Errc::BadLength, offset, "empty ID body");
        return IdBody{body[0], Bytes(body.begin() + 1, body.end())};
    case PayloadType::Cert:
        if (body.empty())
            throw Error(Errc::BadLength, offset, "empty CERT body");
        return CertBody{body[0], Bytes(body.begin() + 1, body.end())};
    case PayloadType::Sig:
        return SigBody{Bytes(body.begin(), body.end())};
    case PayloadType::Dev: {
        if (body.size() < kDevMinBody)
            throw Error(Errc::BadLength, offset,
                        "DEV body needs at least " + std::to_string(kDevMinBody) + " octets");
        DevBody dev;
        dev.format_version = body[0];
        std::copy_n(body.begin() + 1, crypto::kNonceSize, dev.nonce.begin());
        dev.ciphertext.assign(body.begin() + 1 + crypto::kNonceSize, body.end());
        return dev;
    }
    case PayloadType::None:
        break;
    }
    throw Error(Errc::UnknownPayloadType, offset, "no body for type " + std::to_string(static_cast<int>(type)));
}

// Parses a payload chain starting at offset with the given first type.
// Returns the offset just past the last payload.
std::size_t decode_payloads(ByteView bytes, std::size_t offset, std::uint8_t first_type,
                            std::size_t type_offset, std::vector<Payload> &out,
                            std::vector<PayloadSpan> *layout = nullptr)
{
    std::uint8_t type = first_type;
    while (type != 0) {
        if (!is_known_payload_type(type))
            throw Error(Errc::UnknownPayloadType, type_offset, "payload type " + std::to_string(type));
        if (bytes.size() - offset < kGenericHeaderSize)
            throw Error(Errc::Truncated, offset, "generic payload header");
        const std::uint8_t next = bytes[offset];
        if (bytes[offset + 1] != 0)
            throw Error(Errc::NonzeroReserved, offset + 1, "reserved octet is " + std::to_string(bytes[offset + 1]));
        const std::size_t length = load_u16(bytes, offset + 2);
        if (length < kGenericHeaderSize)
            throw Error(Errc::BadLength, offset + 2, "payload length " + std::to_string(length) + " < 4");
        if (length > bytes.size() - offset)
            throw Error(Errc::BadLength, offset + 2, "payload length runs past the end");

        const auto ptype = static_cast<PayloadType>(type);
        const std::size_t body_offset = offset + kGenericHeaderSize;
        out.push_back(Payload{next, decode_body(ptype, bytes.subspan(body_offset, length - kGenericHeaderSize),
                                                body_offset)});
        if (layout)
            layout->push_back(PayloadSpan{ptype, offset, body_offset, length - kGenericHeaderSize});
        type_offset = offset;
        type = next;
        offset += length;
    }
    return offset;
}

Header decode_header(ByteView bytes)
{
    if (bytes.size() < kHeaderSize)
        throw Error(Errc::Truncated, bytes.size(),
                    "header needs " + std::to_string(kHeaderSize) + " octets, have " + std::to_string(bytes.size()));
    Header h;
    std::copy_n(bytes.begin(), 8, h.initiator_cookie.begin());
    std::copy_n(bytes.begin() + 8, 8, h.responder_cookie.begin());
    h.next_payload = bytes[16];
    h.version = bytes[17];
    h.exchange_type = bytes[18];
    h.flags = bytes[19];
    h.message_id = load_u32(bytes, 20);
    h.length = load_u32(bytes, 24);
    if (h.version != kVersion)
        throw Error(Errc::BadVersion, 17, "version " + std::to_string(h.version));
    if (h.exchange_type != kExchangeAggressive)
        throw Error(Errc::BadExchangeType, 18, "exchange type " + std::to_string(h.exchange_type));
    if (h.length != bytes.size())
        throw Error(Errc::BadLength, 24,
                    "header length " + std::to_string(h.length) + " but message has " + std::to_string(bytes.size()));
    return h;
}

Message decode_impl(ByteView bytes, std::vector<PayloadSpan> *layout)
{
    Message msg;
    msg.header = decode_header(bytes);
    const std::size_t end = decode_payloads(bytes, kHeaderSize, msg.header.next_payload, 16, msg.payloads, layout);
    if (msg.header.encrypted()) {
        if (bytes.size() - end < crypto::kNonceSize + crypto::kTagSize)
            throw Error(Errc::BadLength, end, "encrypted blob shorter than nonce and tag");
        msg.encrypted_chain = Bytes(bytes.begin() + static_cast<std::ptrdiff_t>(end), bytes.end());
    } else if (end != bytes.size()) {
        throw Error(Errc::BadLength, end, "trailing octets after the last payload");
    }
    return msg;
}

} // namespace

std::string_view payload_name(PayloadType type)
{
    switch (type) {
    case PayloadType::None: return "NONE";
    case PayloadType::Sa: return "SA";
    case PayloadType::Ke: return "KE";
    case PayloadType::Id: return "ID";
    case PayloadType::Cert: return "CERT";
    case PayloadType::Sig: return "SIG";
    case PayloadType::Nonce: return "NONCE";
    case PayloadType::Dev: return "DEV";
    }
    return "?";
}

bool is_known_payload_type(std::uint8_t code)
{
    switch (static_cast<PayloadType>(code)) {
    case PayloadType::Sa:
    case PayloadType::Ke:
    case PayloadType::Id:
    case PayloadType::Cert:
    case PayloadType::Sig:
    case PayloadType::Nonce:
    case PayloadType::Dev:
        return true;
    case PayloadType::None:
        break;
    }
    return false;
}

PayloadType type_of(const Body &body)
{
    struct Visitor {
        PayloadType operator()(const SaBody &) const { return PayloadType::Sa; }
        PayloadType operator()(const KeBody &) const { return PayloadType::Ke; }
        PayloadType operator()(const NonceBody &) const { return PayloadType::Nonce; }
        PayloadType operator()(const IdBody &) const { return PayloadType::Id; }
        PayloadType operator()(const CertBody &) const { return PayloadType::Cert; }
        PayloadType operator()(const SigBody &) const { return PayloadType::Sig; }
        PayloadType operator()(const DevBody &) const { return PayloadType::Dev; }
    };
    return std::visit(Visitor{}, body);
}

DevBody DevBody::from_sealed(ByteView sealed)
{
    if (sealed.size() < crypto::kNonceSize + crypto::kTagSize)
        throw Error(Errc::MalformedCiphertext, "sealed serial too short for a DEV body");
    DevBody d;
    std::copy_n(sealed.begin(), crypto::kNonceSize, d.nonce.begin());
    d.ciphertext.assign(sealed.begin() + crypto::kNonceSize, sealed.end());
    return d;
}

Bytes DevBody::sealed() const { return concat({view(nonce), view(ciphertext)}); }

Bytes encode_payload_body(const Body &body)
{
    struct Visitor {
        Bytes operator()(const SaBody &b) const { return b.proposal; }
        Bytes operator()(const KeBody &b) const { return b.public_value; }
        Bytes operator()(const NonceBody &b) const { return b.nonce; }
        Bytes operator()(const IdBody &b) const
        {
            Bytes out{b.id_type};
            append(out, b.identity);
            return out;
        }
        Bytes operator()(const CertBody &b) const
        {
            Bytes out{b.encoding};
            append(out, b.data);
            return out;
        }
        Bytes operator()(const SigBody &b) const { return b.signature; }
        Bytes operator()(const DevBody &b) const
        {
            Bytes out{b.format_version};
            append(out, view(b.nonce));
            append(out, b.ciphertext);
            return out;
        }
    };
    return std::visit(Visitor{}, body);
}

void link_chain(std::vector<Payload> &payloads)
{
    for (std::size_t i = 0; i < payloads.size(); ++i)
        payloads[i].next_payload =
            i + 1 < payloads.size() ? static_cast<std::uint8_t>(payloads[i + 1].type()) : std::uint8_t{0};
}

void link_chain(Header &header, std::vector<Payload> &payloads)
{
    link_chain(payloads);
    header.next_payload = payloads.empty() ? 0 : static_cast<std::uint8_t>(payloads.front().type());
}

Bytes encode_message(const Message &msg)
{
    require_chain(msg.header.next_payload, msg.payloads, 0);
    if (msg.header.encrypted() != msg.encrypted_chain.has_value())
        throw Error(Errc::ChainMismatch, "encryption flag and encrypted chain disagree");

    Bytes out;
    append(out, view(msg.header.initiator_cookie));
    append(out, view(msg.header.responder_cookie));
    append_u8(out, msg.header.next_payload);
    append_u8(out, msg.header.version);
    append_u8(out, msg.header.exchange_type);
    append_u8(out, msg.header.flags);
    append_u32(out, msg.header.message_id);
    append_u32(out, 0);  // length, patched below
    encode_payloads(out, msg.payloads);
    if (msg.encrypted_chain)
        append(out, *msg.encrypted_chain);

    const auto length = static_cast<std::uint32_t>(out.size());
    for (int i = 0; i < 4; ++i)
        out[24 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(length >> (24 - 8 * i));
    return out;
}

Message decode_message(ByteView bytes) { return decode_impl(bytes, nullptr); }

Bytes encode_chain(const std::vector<Payload> &payloads)
{
    Bytes out;
    append_u8(out, payloads.empty() ? std::uint8_t{0} : static_cast<std::uint8_t>(payloads.front().type()));
    encode_payloads(out, payloads);
    return out;
}

std::vector<Payload> decode_chain(ByteView bytes)
{
    if (bytes.empty())
        throw Error(Errc::Truncated, 0, "empty chain");
    std::vector<Payload> out;
    const std::size_t end = decode_payloads(bytes, 1, bytes[0], 0, out);
    if (end != bytes.size())
        throw Error(Errc::BadLength, end, "trailing octets after the chain");
    return out;
}

Bytes encrypt_payload_chain(const crypto::SymmetricKey &key, const std::vector<Payload> &payloads,
                            crypto::Drbg &rng, const crypto::Aead &aead)
{
    return crypto::seal_blob(aead, key, encode_chain(payloads), rng);
}

std::vector<Payload> decrypt_payload_chain(const crypto::SymmetricKey &key, ByteView blob, const crypto::Aead &aead)
{
    Bytes plain = crypto::open_blob(aead, key, blob);
    return decode_chain(plain);
}

std::vector<PayloadSpan> payload_layout(ByteView message)
{
    std::vector<PayloadSpan> layout;
    decode_impl(message, &layout);
    return layout;
}

std::vector<PayloadSpan> chain_layout(ByteView chain)
{
    if (chain.empty())
        throw Error(Errc::Truncated, 0, "empty chain");
    std::vector<PayloadSpan> layout;
    std::vector<Payload> sink;
    decode_payloads(chain, 1, chain[0], 0, sink, &layout);
    return layout;
}

std::optional<std::size_t> encrypted_chain_offset(ByteView message)
{
    Message m = decode_message(message);
    if (!m.encrypted_chain)
        return std::nullopt;
    return message.size() - m.encrypted_chain->size();
}

const Bytes &default_sa_proposal()
{
    static const Bytes sa = build_default_sa();
    return sa;
}

} // namespace ikeusb::codec
