#include "ikeusb/crypto.hpp"
#include "ikeusb/error.hpp"

#include <memory>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

namespace ikeusb::crypto {

namespace {

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX *ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

struct PkeyDeleter {
    void operator()(EVP_PKEY *k) const { EVP_PKEY_free(k); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX *c) const { EVP_MD_CTX_free(c); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

void check(int ok, const char *what)
{
    if (ok != 1)
        throw std::runtime_error(std::string("openssl: ") + what);
}

// AES-256-GCM with a 128-bit IV and 128-bit tag.
class AesGcm final : public Aead {
public:
    std::string_view id() const override { return "aes-256-gcm"; }
    std::uint8_t algorithm_code() const override { return 0x14; }

    Bytes seal(const SymmetricKey &key, ByteView nonce, ByteView plaintext) const override
    {
        CipherCtx ctx(EVP_CIPHER_CTX_new());
        check(ctx != nullptr, "cipher ctx");
        check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "init");
        check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
              "ivlen");
        check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), nonce.data()), "key");

        Bytes out(plaintext.size() + kTagSize);
        int len = 0;
        if (!plaintext.empty())
            check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                                    static_cast<int>(plaintext.size())),
                  "update");
        int tail = 0;
        check(EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &tail), "final");
        check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, out.data() + plaintext.size()),
              "tag");
        return out;
    }

    Bytes open(const SymmetricKey &key, ByteView nonce, ByteView sealed) const override
    {
        if (sealed.size() < kTagSize)
            throw Error(Errc::MalformedCiphertext, "shorter than the tag");
        const std::size_t body = sealed.size() - kTagSize;

        CipherCtx ctx(EVP_CIPHER_CTX_new());
        check(ctx != nullptr, "cipher ctx");
        check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "init");
        check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
              "ivlen");
        check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), nonce.data()), "key");

        Bytes out(body);
        int len = 0;
        if (body > 0)
            check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)),
                  "update");
        Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(body), sealed.end());
        check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data()), "tag");
        int tail = 0;
        if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1)
            throw Error(Errc::AuthFailure, "tag mismatch");
        return out;
    }
};

class Ed25519 final : public SignatureScheme {
public:
    std::string_view id() const override { return "ed25519"; }

    KeyPair keypair(Drbg &rng) const override
    {
        KeyPair kp;
        rng.fill(kp.private_key.seed);
        Pkey key = load_private(kp.private_key);
        std::size_t len = kp.public_key.bytes.size();
        check(EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.bytes.data(), &len), "raw public key");
        return kp;
    }

    Bytes sign(const PrivateKey &priv, ByteView data) const override
    {
        Pkey key = load_private(priv);
        MdCtx ctx(EVP_MD_CTX_new());
        check(ctx != nullptr, "md ctx");
        check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()), "sign init");
        std::size_t len = 64;
        Bytes sig(len);
        check(EVP_DigestSign(ctx.get(), sig.data(), &len, data.data(), data.size()), "sign");
        sig.resize(len);
        return sig;
    }

    bool verify(const PublicKey &pub, ByteView data, ByteView signature) const override
    {
        Pkey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.bytes.data(), pub.bytes.size()));
        if (!key)
            return false;
        MdCtx ctx(EVP_MD_CTX_new());
        check(ctx != nullptr, "md ctx");
        check(EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()), "verify init");
        return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), data.data(), data.size()) == 1;
    }

private:
    static Pkey load_private(const PrivateKey &priv)
    {
        Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, priv.seed.data(), priv.seed.size()));
        check(key != nullptr, "raw private key");
        return key;
    }
};

const std::string_view kSerialKdfLabel = "ikeusb/kdf-serial/v1";
const std::string_view kSessionKdfLabel = "ikeusb/kdf-session/v1";

} // namespace

std::string_view suite_id()
{
    return "ikeusb-suite-1(prf=hmac-sha256,aead=aes-256-gcm/128,sig=ed25519,kdf=hmac-sha256)";
}

SymmetricKey SymmetricKey::from(ByteView raw)
{
    if (raw.size() != kKeySize)
        throw std::invalid_argument("symmetric key must be 32 octets");
    SymmetricKey k;
    std::copy(raw.begin(), raw.end(), k.bytes.begin());
    return k;
}

// --- Drbg -------------------------------------------------------------------

Drbg::Drbg(ByteView seed)
{
    Bytes k = sha256(seed);
    std::copy(k.begin(), k.end(), key_.begin());
}

Drbg::Drbg(std::uint64_t seed, std::string_view label)
{
    Bytes material;
    append_u32(material, static_cast<std::uint32_t>(seed >> 32));
    append_u32(material, static_cast<std::uint32_t>(seed));
    append(material, {reinterpret_cast<const std::uint8_t *>(label.data()), label.size()});
    Bytes k = sha256(material);
    std::copy(k.begin(), k.end(), key_.begin());
}

void Drbg::fill(std::span<std::uint8_t> out)
{
    for (auto &b : out) {
        if (used_ == block_.size()) {
            Bytes ctr;
            append_u32(ctr, static_cast<std::uint32_t>(counter_ >> 32));
            append_u32(ctr, static_cast<std::uint32_t>(counter_));
            ++counter_;
            Bytes blk = hmac_sha256(view(key_), ctr);
            std::copy(blk.begin(), blk.end(), block_.begin());
            used_ = 0;
        }
        b = block_[used_++];
    }
}

Bytes Drbg::bytes(std::size_t n)
{
    Bytes out(n);
    fill(out);
    return out;
}

std::uint64_t Drbg::next_u64()
{
    std::array<std::uint8_t, 8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    for (auto b : raw)
        v = (v << 8) | b;
    return v;
}

std::uint64_t Drbg::uniform(std::uint64_t bound)
{
    if (bound == 0)
        throw std::invalid_argument("uniform: zero bound");
    // rejection sampling keeps the result unbiased
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        std::uint64_t v = next_u64();
        if (v < limit)
            return v % bound;
    }
}

Drbg Drbg::fork(std::string_view label) const
{
    Bytes material = to_bytes("fork:");
    append(material, to_bytes(label));
    Bytes child = hmac_sha256(view(key_), material);
    return Drbg(child);
}

// --- hashes -----------------------------------------------------------------

Bytes sha256(ByteView data)
{
    Bytes out(SHA256_DIGEST_LENGTH);
    SHA256(data.data(), data.size(), out.data());
    return out;
}

Bytes hmac_sha256(ByteView key, ByteView data)
{
    Bytes out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    // HMAC() wants a non-null key pointer even for an empty key
    static const std::uint8_t empty = 0;
    const std::uint8_t *k = key.empty() ? &empty : key.data();
    if (HMAC(EVP_sha256(), k, static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len) ==
        nullptr)
        throw std::runtime_error("openssl: hmac");
    out.resize(len);
    return out;
}

// --- AEAD -------------------------------------------------------------------

const Aead &default_aead()
{
    static const AesGcm instance;
    return instance;
}

const Aead &aead_by_id(std::string_view id)
{
    if (id == default_aead().id())
        return default_aead();
    throw Error(Errc::ConfigError, "unknown cipher id '" + std::string(id) + "'");
}

Bytes seal_blob(const Aead &aead, const SymmetricKey &key, ByteView plaintext, Drbg &rng)
{
    Bytes blob = rng.bytes(kNonceSize);
    Bytes sealed = aead.seal(key, blob, plaintext);
    append(blob, sealed);
    return blob;
}

Bytes open_blob(const Aead &aead, const SymmetricKey &key, ByteView blob)
{
    if (blob.size() < kNonceSize + kTagSize)
        throw Error(Errc::MalformedCiphertext, "need nonce and tag, got " + std::to_string(blob.size()) + " octets");
    return aead.open(key, blob.first(kNonceSize), blob.subspan(kNonceSize));
}

// --- serial keys ------------------------------------------------------------

SymmetricKey kdf_serial(ByteView serial)
{
    if (serial.size() != kSerialSize)
        throw Error(Errc::InvalidSerialLength, "serial must be 7 octets, got " + std::to_string(serial.size()));
    return SymmetricKey::from(hmac_sha256(to_bytes(kSerialKdfLabel), serial));
}

SymmetricKey kdf_session(const SymmetricKey &key1, ByteView serial)
{
    if (serial.size() != kSerialSize)
        throw Error(Errc::InvalidSerialLength, "serial must be 7 octets, got " + std::to_string(serial.size()));
    Bytes data = to_bytes(kSessionKdfLabel);
    append(data, serial);
    return SymmetricKey::from(hmac_sha256(key1.view(), data));
}

// --- signatures -------------------------------------------------------------

const SignatureScheme &default_signature_scheme()
{
    static const Ed25519 instance;
    return instance;
}

const SignatureScheme &signature_scheme_by_id(std::string_view id)
{
    if (id == default_signature_scheme().id())
        return default_signature_scheme();
    throw Error(Errc::ConfigError, "unknown signature scheme '" + std::string(id) + "'");
}

// --- phase-1 derivations ----------------------------------------------------

SkeyidBundle derive_skeyid(ByteView ni, ByteView nr, ByteView gxy, ByteView cky_i, ByteView cky_r)
{
    if (ni.empty() || nr.empty() || gxy.empty() || cky_i.empty() || cky_r.empty())
        throw std::invalid_argument("derive_skeyid: empty input");

    static const std::uint8_t zero = 0, one = 1, two = 2;
    SkeyidBundle b;
    b.skeyid = prf(concat({ni, nr}), gxy);
    b.skeyid_d = prf(b.skeyid, concat({gxy, cky_i, cky_r, ByteView(&zero, 1)}));
    b.skeyid_a = prf(b.skeyid, concat({b.skeyid_d, gxy, cky_i, cky_r, ByteView(&one, 1)}));
    b.skeyid_e = prf(b.skeyid, concat({b.skeyid_a, gxy, cky_i, cky_r, ByteView(&two, 1)}));
    return b;
}

Bytes compute_hash_i(ByteView skeyid, ByteView gxi, ByteView gxr, ByteView cky_i, ByteView cky_r,
                     ByteView sai_b, ByteView idii_b)
{
    return prf(skeyid, concat({gxi, gxr, cky_i, cky_r, sai_b, idii_b}));
}

Bytes compute_hash_r(ByteView skeyid, ByteView gxr, ByteView gxi, ByteView cky_r, ByteView cky_i,
                     ByteView sai_b, ByteView idir_b, ByteView sar_b)
{
    return prf(skeyid, concat({gxr, gxi, cky_r, cky_i, sai_b, idir_b, sar_b}));
}

} // namespace ikeusb::crypto
