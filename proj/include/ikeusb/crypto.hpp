// crypto.hpp
//
// primitive suite and the IKE phase-1 key derivations
//
// The default suite is HMAC-SHA256 as PRF and KDF, AES-256-GCM with a
// 16-octet nonce as the AEAD, Ed25519 for signatures.  The AEAD and
// signature scheme sit behind small interfaces so a deployment can name
// another implementation by id.

#ifndef IKEUSB_CRYPTO_HPP
#define IKEUSB_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "ikeusb/bytes.hpp"

namespace ikeusb::crypto {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kPrfSize = 32;

std::string_view suite_id();

struct SymmetricKey {
    std::array<std::uint8_t, kKeySize> bytes{};

    ByteView view() const { return {bytes.data(), bytes.size()}; }
    static SymmetricKey from(ByteView raw);  // raw must be kKeySize octets
    bool operator==(const SymmetricKey &) const = default;
};

// Deterministic byte source for the simulator.  K = SHA-256(seed || label)
// and output block i is HMAC-SHA256(K, u64be(i)); not a general purpose CSPRNG, but
// every run with the same seed sees the same keys, nonces and cookies.
class Drbg {
public:
    explicit Drbg(ByteView seed);
    Drbg(std::uint64_t seed, std::string_view label);

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t n);
    std::uint64_t next_u64();
    // uniform in [0, bound); bound > 0
    std::uint64_t uniform(std::uint64_t bound);

    // independent child stream, keyed by label
    Drbg fork(std::string_view label) const;

private:
    std::array<std::uint8_t, 32> key_{};
    std::uint64_t counter_ = 0;
    std::array<std::uint8_t, 32> block_{};
    std::size_t used_ = 32;
};

Bytes sha256(ByteView data);
Bytes hmac_sha256(ByteView key, ByteView data);

// prf(key, data) of the suite
inline Bytes prf(ByteView key, ByteView data) { return hmac_sha256(key, data); }

// --- AEAD -----------------------------------------------------------------

class Aead {
public:
    virtual ~Aead() = default;
    virtual std::string_view id() const = 0;
    // identifier byte kept in a token's algorithm region
    virtual std::uint8_t algorithm_code() const = 0;
    // returns ciphertext || tag
    virtual Bytes seal(const SymmetricKey &key, ByteView nonce, ByteView plaintext) const = 0;
    // input is ciphertext || tag; throws Error(AuthFailure) on tag mismatch
    virtual Bytes open(const SymmetricKey &key, ByteView nonce, ByteView sealed) const = 0;
};

const Aead &default_aead();
// throws Error(ConfigError) for an unknown id
const Aead &aead_by_id(std::string_view id);

// nonce || ciphertext || tag, with the nonce drawn from rng
Bytes seal_blob(const Aead &aead, const SymmetricKey &key, ByteView plaintext, Drbg &rng);
// MalformedCiphertext when shorter than nonce + tag, AuthFailure on a bad tag
Bytes open_blob(const Aead &aead, const SymmetricKey &key, ByteView blob);

// --- serial keys ----------------------------------------------------------

// stretches a 7-octet device serial to a full cipher key
SymmetricKey kdf_serial(ByteView serial);
// per-sender chain key bound to the fleet secret
SymmetricKey kdf_session(const SymmetricKey &key1, ByteView serial);

// --- signatures -----------------------------------------------------------

struct PublicKey {
    std::array<std::uint8_t, 32> bytes{};
    bool operator==(const PublicKey &) const = default;
};

struct PrivateKey {
    std::array<std::uint8_t, 32> seed{};
};

struct KeyPair {
    PrivateKey private_key;
    PublicKey public_key;
};

class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual std::string_view id() const = 0;
    virtual KeyPair keypair(Drbg &rng) const = 0;
    virtual Bytes sign(const PrivateKey &key, ByteView data) const = 0;
    virtual bool verify(const PublicKey &key, ByteView data, ByteView signature) const = 0;
};

const SignatureScheme &default_signature_scheme();
const SignatureScheme &signature_scheme_by_id(std::string_view id);

inline Bytes sign(const PrivateKey &key, ByteView data)
{
    return default_signature_scheme().sign(key, data);
}

inline bool verify(const PublicKey &key, ByteView data, ByteView signature)
{
    return default_signature_scheme().verify(key, data, signature);
}

// --- phase-1 derivations --------------------------------------------------

struct SkeyidBundle {
    Bytes skeyid;
    Bytes skeyid_d;
    Bytes skeyid_a;
    Bytes skeyid_e;
    bool operator==(const SkeyidBundle &) const = default;
};

// Signature authentication:
//   SKEYID   = prf(Ni_b | Nr_b, g^xy)
//   SKEYID_d = prf(SKEYID, g^xy | CKY-I | CKY-R | 0)
//   SKEYID_a = prf(SKEYID, SKEYID_d | g^xy | CKY-I | CKY-R | 1)
//   SKEYID_e = prf(SKEYID, SKEYID_a | g^xy | CKY-I | CKY-R | 2)
SkeyidBundle derive_skeyid(ByteView ni, ByteView nr, ByteView gxy, ByteView cky_i, ByteView cky_r);

// HASH_I = prf(SKEYID, g^xi | g^xr | CKY-I | CKY-R | SAi_b | IDii_b)
Bytes compute_hash_i(ByteView skeyid, ByteView gxi, ByteView gxr, ByteView cky_i, ByteView cky_r,
                     ByteView sai_b, ByteView idii_b);

// HASH_R = prf(SKEYID, g^xr | g^xi | CKY-R | CKY-I | SAi_b | IDir_b | SAr_b)
// The responder's accepted proposal is appended so a rewrite of the
// returned SA cannot go unnoticed.
Bytes compute_hash_r(ByteView skeyid, ByteView gxr, ByteView gxi, ByteView cky_r, ByteView cky_i,
                     ByteView sai_b, ByteView idir_b, ByteView sar_b);

} // namespace ikeusb::crypto

#endif
