// codec.hpp
//
// ISAKMP phase-1 wire format
//
//                          1                   2                   3
//      0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     !                          Initiator                            !
//     !                            Cookie                             !
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     !                          Responder                            !
//     !                            Cookie                             !
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     !  Next Payload ! MjVer ! MnVer ! Exchange Type !     Flags     !
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     !                          Message ID                           !
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     !                            Length                             !
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//
// Every payload starts with the generic header
//
//     ! Next Payload  !   RESERVED    !         Payload Length        !
//
// When the encryption flag is set the cleartext chain (possibly empty,
// in practice a single DEV payload) ends with next_payload = 0 and every
// remaining octet up to Length is one sealed blob:
//
//     nonce[16] | AEAD( first_type | payload chain ) | tag[16]
//
// The DEV payload (type 55) body is
//
//     u8 format_version (1) | nonce[16] | AEAD(dev_serial[7]) | tag[16]

#ifndef IKEUSB_CODEC_HPP
#define IKEUSB_CODEC_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "ikeusb/bytes.hpp"
#include "ikeusb/crypto.hpp"

namespace ikeusb::codec {

enum class PayloadType : std::uint8_t {
    None = 0,
    Sa = 1,
    Ke = 4,
    Id = 5,
    Cert = 6,
    Sig = 9,
    Nonce = 10,
    Dev = 55,  // device information (UMi / UMr)
};

inline constexpr std::uint8_t kVersion = 0x10;
inline constexpr std::uint8_t kExchangeAggressive = 4;
inline constexpr std::uint8_t kFlagEncrypted = 0x01;
inline constexpr std::size_t kHeaderSize = 28;
inline constexpr std::size_t kGenericHeaderSize = 4;
inline constexpr std::size_t kMinNonce = 8;
inline constexpr std::size_t kMaxNonce = 256;
inline constexpr std::uint8_t kDevFormatVersion = 1;
inline constexpr std::size_t kDevMinBody = 1 + crypto::kNonceSize + crypto::kTagSize;
inline constexpr std::uint8_t kIdUserFqdn = 3;
// private-use certificate encoding: token self-signed certificate
inline constexpr std::uint8_t kCertEncodingToken = 201;

std::string_view payload_name(PayloadType type);
bool is_known_payload_type(std::uint8_t code);

using Cookie = std::array<std::uint8_t, 8>;

struct Header {
    Cookie initiator_cookie{};
    Cookie responder_cookie{};
    std::uint8_t next_payload = 0;
    std::uint8_t version = kVersion;
    std::uint8_t exchange_type = kExchangeAggressive;
    std::uint8_t flags = 0;
    std::uint32_t message_id = 0;
    std::uint32_t length = 0;

    bool encrypted() const { return (flags & kFlagEncrypted) != 0; }
    bool operator==(const Header &) const = default;
};

struct SaBody {
    Bytes proposal;
    bool operator==(const SaBody &) const = default;
};
struct KeBody {
    Bytes public_value;
    bool operator==(const KeBody &) const = default;
};
struct NonceBody {
    Bytes nonce;
    bool operator==(const NonceBody &) const = default;
};
struct IdBody {
    std::uint8_t id_type = kIdUserFqdn;
    Bytes identity;
    bool operator==(const IdBody &) const = default;
};
struct CertBody {
    std::uint8_t encoding = kCertEncodingToken;
    Bytes data;
    bool operator==(const CertBody &) const = default;
};
struct SigBody {
    Bytes signature;
    bool operator==(const SigBody &) const = default;
};
struct DevBody {
    std::uint8_t format_version = kDevFormatVersion;
    std::array<std::uint8_t, crypto::kNonceSize> nonce{};
    Bytes ciphertext;  // AEAD output including tag

    // builds a body from a token's nonce || ciphertext || tag output
    static DevBody from_sealed(ByteView sealed);
    Bytes sealed() const;
    bool operator==(const DevBody &) const = default;
};

using Body = std::variant<SaBody, KeBody, NonceBody, IdBody, CertBody, SigBody, DevBody>;

PayloadType type_of(const Body &body);

struct Payload {
    std::uint8_t next_payload = 0;
    Body body;

    PayloadType type() const { return type_of(body); }
    bool operator==(const Payload &) const = default;
};

struct Message {
    Header header;
    std::vector<Payload> payloads;
    // present iff header.encrypted()
    std::optional<Bytes> encrypted_chain;

    bool operator==(const Message &) const = default;
};

// Sets every next_payload link (and the header's) from the payload order.
void link_chain(Header &header, std::vector<Payload> &payloads);
void link_chain(std::vector<Payload> &payloads);

template <typename T>
const T *find_body(const std::vector<Payload> &payloads)
{
    for (const auto &p : payloads)
        if (auto *b = std::get_if<T>(&p.body))
            return b;
    return nullptr;
}

// Serialises big-endian and recomputes header.length.  ChainMismatch when a
// next_payload link disagrees with its successor, BadLength when a body
// would overflow a 16-bit payload length.
Bytes encode_message(const Message &msg);

// Total on arbitrary input: returns a message or throws Error naming the
// offset (Truncated, BadVersion, BadExchangeType, BadLength,
// UnknownPayloadType, NonzeroReserved).
Message decode_message(ByteView bytes);

// first_type | chain, the plaintext inside an encrypted blob
Bytes encode_chain(const std::vector<Payload> &payloads);
std::vector<Payload> decode_chain(ByteView bytes);

Bytes encode_payload_body(const Body &body);

Bytes encrypt_payload_chain(const crypto::SymmetricKey &key, const std::vector<Payload> &payloads,
                            crypto::Drbg &rng, const crypto::Aead &aead = crypto::default_aead());
// authenticates before parsing; AuthFailure on a wrong key or modified blob
std::vector<Payload> decrypt_payload_chain(const crypto::SymmetricKey &key, ByteView blob,
                                           const crypto::Aead &aead = crypto::default_aead());

// Where a payload sits inside an encoded message or chain.
struct PayloadSpan {
    PayloadType type;
    std::size_t offset;       // generic header
    std::size_t body_offset;  // first body octet
    std::size_t body_length;
};

// cleartext payloads of an encoded message (decodes it first)
std::vector<PayloadSpan> payload_layout(ByteView message);
// payloads inside an encode_chain() plaintext
std::vector<PayloadSpan> chain_layout(ByteView chain);

// offset of the blob within an encrypted message, or nullopt
std::optional<std::size_t> encrypted_chain_offset(ByteView message);

// One proposal, one transform: AES-CBC-256, SHA2-256, Ed25519 signature
// auth, Oakley group 1, 8 hour lifetime.  Opaque to the state machine.
const Bytes &default_sa_proposal();

} // namespace ikeusb::codec

#endif
