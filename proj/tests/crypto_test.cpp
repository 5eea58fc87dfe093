#include "golden_vectors.hpp"
#include "ikeusb/crypto.hpp"
#include "ikeusb/dh.hpp"
#include "ikeusb/error.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ikeusb;
using namespace ikeusb::crypto;

namespace {

// square-and-multiply on machine words, for groups small enough to check by hand
std::uint64_t naive_modexp(std::uint64_t base, std::uint64_t exp, std::uint64_t mod)
{
    std::uint64_t result = 1 % mod;
    base %= mod;
    while (exp > 0) {
        if (exp & 1)
            result = result * base % mod;
        base = base * base % mod;
        exp >>= 1;
    }
    return result;
}

Bytes hx(const char *s) { return from_hex(s); }

std::size_t bit_distance(ByteView a, ByteView b)
{
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += static_cast<std::size_t>(__builtin_popcount(a[i] ^ b[i]));
    return d;
}

} // namespace

TEST(Drbg, MatchesReferenceStream)
{
    Drbg rng(42, "label");
    EXPECT_EQ(to_hex(rng.bytes(80)), golden::kDrbg42Label);
}

TEST(Drbg, SameSeedSameStream)
{
    Drbg a(7, "x"), b(7, "x"), c(8, "x"), d(7, "y");
    Bytes sa = a.bytes(100);
    EXPECT_EQ(sa, b.bytes(100));
    EXPECT_NE(sa, c.bytes(100));
    EXPECT_NE(sa, d.bytes(100));
}

TEST(Drbg, UniformStaysInRange)
{
    Drbg rng(3, "uniform");
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 7000; ++i) {
        auto v = rng.uniform(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    for (int h : hist)
        EXPECT_GT(h, 800);
    EXPECT_THROW(rng.uniform(0), std::invalid_argument);
}

TEST(Drbg, ForkIsIndependentOfParentPosition)
{
    Drbg a(1, "p");
    Drbg fa = a.fork("child");
    a.bytes(64);
    Drbg fb = a.fork("child");
    EXPECT_EQ(fa.bytes(32), fb.bytes(32));
    EXPECT_NE(a.fork("child").bytes(32), a.fork("other").bytes(32));
}

TEST(Hmac, Rfc4231Case2)
{
    EXPECT_EQ(to_hex(hmac_sha256(to_bytes("Jefe"), to_bytes("what do ya want for nothing?"))),
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Aead, MatchesReferenceCiphertext)
{
    auto key = SymmetricKey::from(hx("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"));
    Bytes nonce(16);
    for (int i = 0; i < 16; ++i)
        nonce[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(100 + i);
    const auto &gcm = default_aead();
    EXPECT_EQ(gcm.id(), "aes-256-gcm");
    Bytes sealed = gcm.seal(key, nonce, to_bytes("AB12345"));
    EXPECT_EQ(to_hex(sealed), golden::kGcmSerialCiphertext);
    EXPECT_EQ(gcm.open(key, nonce, sealed), to_bytes("AB12345"));
}

TEST(Aead, BlobRoundTripAndFailures)
{
    Drbg rng(9, "aead");
    auto key = SymmetricKey::from(rng.bytes(32));
    Bytes blob = seal_blob(default_aead(), key, to_bytes("payload chain"), rng);
    ASSERT_EQ(blob.size(), kNonceSize + 13 + kTagSize);
    EXPECT_EQ(open_blob(default_aead(), key, blob), to_bytes("payload chain"));

    for (std::size_t i = 0; i < blob.size(); ++i) {
        Bytes bad = blob;
        bad[i] ^= 0x01;
        try {
            open_blob(default_aead(), key, bad);
            ADD_FAILURE() << "flip at " << i << " accepted";
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), Errc::AuthFailure);
        }
    }
    try {
        open_blob(default_aead(), key, Bytes(31, 0));
        ADD_FAILURE();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::MalformedCiphertext);
    }
    auto other = SymmetricKey::from(rng.bytes(32));
    EXPECT_THROW(open_blob(default_aead(), other, blob), Error);
}

TEST(Aead, LookupById)
{
    EXPECT_EQ(&aead_by_id("aes-256-gcm"), &default_aead());
    try {
        aead_by_id("rot13");
        ADD_FAILURE();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::ConfigError);
    }
}

TEST(Kdf, MatchesReference)
{
    auto key1 = SymmetricKey::from(hx("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"));
    EXPECT_EQ(to_hex(kdf_serial(to_bytes("AB12345")).view()), golden::kKdfSerialAB12345);
    EXPECT_EQ(to_hex(kdf_session(key1, to_bytes("AB12345")).view()), golden::kKdfSessionAB12345);
}

TEST(Kdf, RejectsWrongSerialLength)
{
    SymmetricKey key1{};
    for (std::size_t n : {0u, 6u, 8u, 16u}) {
        Bytes s(n, 0x41);
        try {
            kdf_serial(s);
            ADD_FAILURE() << n;
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), Errc::InvalidSerialLength);
        }
        EXPECT_THROW(kdf_session(key1, s), Error);
    }
}

TEST(Kdf, NoCollisionsOverTenThousandSerials)
{
    Drbg rng(11, "serials");
    auto key1 = SymmetricKey::from(rng.bytes(32));
    std::set<Bytes> serial_keys, session_keys;
    std::set<Bytes> serials;
    while (serials.size() < 10000)
        serials.insert(rng.bytes(kSerialSize));
    for (const auto &s : serials) {
        Bytes ks(kdf_serial(s).bytes.begin(), kdf_serial(s).bytes.end());
        Bytes kx(kdf_session(key1, s).bytes.begin(), kdf_session(key1, s).bytes.end());
        EXPECT_NE(ks, kx);
        EXPECT_NE(kx, Bytes(key1.bytes.begin(), key1.bytes.end()));
        serial_keys.insert(ks);
        session_keys.insert(kx);
    }
    EXPECT_EQ(serial_keys.size(), serials.size());
    EXPECT_EQ(session_keys.size(), serials.size());
}

TEST(Kdf, SessionKeyDependsOnKey1)
{
    Drbg rng(12, "k1");
    auto a = SymmetricKey::from(rng.bytes(32));
    auto b = SymmetricKey::from(rng.bytes(32));
    Bytes s = to_bytes("CD67890");
    EXPECT_NE(kdf_session(a, s), kdf_session(b, s));
}

TEST(Ed25519, Rfc8032VectorOne)
{
    PrivateKey sk;
    Bytes seed = hx("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
    std::copy(seed.begin(), seed.end(), sk.seed.begin());
    Bytes sig = sign(sk, {});
    EXPECT_EQ(to_hex(sig), golden::kEd25519SigEmpty);
    EXPECT_EQ(to_hex(sign(sk, to_bytes("hello, token"))), golden::kEd25519SigHello);

    PublicKey pk;
    Bytes pub = hx(golden::kEd25519Public);
    std::copy(pub.begin(), pub.end(), pk.bytes.begin());
    EXPECT_TRUE(verify(pk, {}, sig));
}

TEST(Ed25519, BitFlipsAndWrongKeyFail)
{
    Drbg rng(5, "sig");
    const auto &scheme = default_signature_scheme();
    EXPECT_EQ(scheme.id(), "ed25519");
    KeyPair kp = scheme.keypair(rng);
    KeyPair other = scheme.keypair(rng);
    Bytes msg = rng.bytes(64);
    Bytes sig = scheme.sign(kp.private_key, msg);
    ASSERT_EQ(sig.size(), 64u);
    EXPECT_TRUE(scheme.verify(kp.public_key, msg, sig));
    EXPECT_FALSE(scheme.verify(other.public_key, msg, sig));
    for (std::size_t i = 0; i < sig.size(); i += 7) {
        Bytes bad = sig;
        bad[i] ^= 0x20;
        EXPECT_FALSE(scheme.verify(kp.public_key, msg, bad)) << i;
    }
    for (std::size_t i = 0; i < msg.size(); i += 5) {
        Bytes bad = msg;
        bad[i] ^= 0x01;
        EXPECT_FALSE(scheme.verify(kp.public_key, bad, sig)) << i;
    }
    EXPECT_FALSE(scheme.verify(kp.public_key, msg, Bytes(63, 0)));
}

TEST(Skeyid, MatchesReference)
{
    Bytes ni(16), nr(32);
    for (int i = 0; i < 16; ++i)
        ni[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    for (int i = 0; i < 32; ++i)
        nr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(16 + i);
    Bytes gxy(96, 0xAA);
    Bytes cky_i = hx("0102030405060708"), cky_r = hx("1112131415161718");
    auto b = derive_skeyid(ni, nr, gxy, cky_i, cky_r);
    EXPECT_EQ(to_hex(b.skeyid), golden::kSkeyid);
    EXPECT_EQ(to_hex(b.skeyid_d), golden::kSkeyidD);
    EXPECT_EQ(to_hex(b.skeyid_a), golden::kSkeyidA);
    EXPECT_EQ(to_hex(b.skeyid_e), golden::kSkeyidE);

    Bytes gxi(96, 0x11), gxr(96, 0x22);
    Bytes sa = hx("00000001000000010000000c00000001");
    Bytes idii = concat({Bytes{3}, to_bytes("alice")});
    Bytes idir = concat({Bytes{3}, to_bytes("bob")});
    EXPECT_EQ(to_hex(compute_hash_i(b.skeyid, gxi, gxr, cky_i, cky_r, sa, idii)), golden::kHashI);
    EXPECT_EQ(to_hex(compute_hash_r(b.skeyid, gxr, gxi, cky_r, cky_i, sa, idir, sa)), golden::kHashR);
}

TEST(Skeyid, HashIAvalanche)
{
    Drbg rng(21, "avalanche");
    Bytes skeyid = rng.bytes(32), gxi = rng.bytes(96), gxr = rng.bytes(96), ci = rng.bytes(8), cr = rng.bytes(8),
          sa = rng.bytes(52), id = rng.bytes(6);
    Bytes base = compute_hash_i(skeyid, gxi, gxr, ci, cr, sa, id);
    std::vector<Bytes *> inputs = {&skeyid, &gxi, &gxr, &ci, &cr, &sa, &id};
    for (Bytes *in : inputs) {
        for (std::size_t bit = 0; bit < in->size() * 8; bit += 13) {
            (*in)[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            Bytes h = compute_hash_i(skeyid, gxi, gxr, ci, cr, sa, id);
            (*in)[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            auto d = bit_distance(base, h);
            EXPECT_GT(d, 64u);
            EXPECT_LT(d, 192u);
        }
    }
}

TEST(Skeyid, HashRCoversResponderProposal)
{
    Drbg rng(22, "hash-r");
    Bytes k = rng.bytes(32), gxr = rng.bytes(96), gxi = rng.bytes(96), cr = rng.bytes(8), ci = rng.bytes(8),
          sa = rng.bytes(52), id = rng.bytes(4);
    Bytes sar = sa;
    Bytes h = compute_hash_r(k, gxr, gxi, cr, ci, sa, id, sar);
    sar[10] ^= 1;
    EXPECT_NE(h, compute_hash_r(k, gxr, gxi, cr, ci, sa, id, sar));
}

TEST(Dh, Test23ByHand)
{
    const auto &g = DhGroup::test23();
    ASSERT_EQ(g.prime, Bytes{23});
    for (std::uint64_t x = 2; x <= 21; ++x) {
        auto kp = dh_keypair_from_exponent(g, Bytes{static_cast<std::uint8_t>(x)});
        EXPECT_EQ(kp.public_value, Bytes{static_cast<std::uint8_t>(naive_modexp(2, x, 23))}) << x;
    }
    // 2^6 mod 23 = 18; 2 has order 11, so the shared 2^30 mod 23 = 2^8 mod 23 = 3
    auto a = dh_keypair_from_exponent(g, Bytes{6});
    auto b = dh_keypair_from_exponent(g, Bytes{5});
    EXPECT_EQ(a.public_value, Bytes{18});
    EXPECT_EQ(dh_shared(g, a.secret, b.public_value), Bytes{3});
    EXPECT_EQ(dh_shared(g, b.secret, a.public_value), Bytes{3});
}

TEST(Dh, WeakPublicValuesRejected)
{
    const auto &g = DhGroup::test23();
    for (std::uint8_t bad : {0, 1, 22, 23, 200}) {
        EXPECT_FALSE(dh_public_value_ok(g, Bytes{bad}));
        try {
            dh_shared(g, Bytes{6}, Bytes{bad});
            ADD_FAILURE() << int(bad);
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), Errc::WeakPublicValue);
        }
    }
    for (std::uint8_t ok = 2; ok <= 21; ++ok)
        EXPECT_TRUE(dh_public_value_ok(g, Bytes{ok}));

    const auto &big = DhGroup::oakley768();
    Bytes pm1 = big.prime;
    pm1.back() -= 1;
    EXPECT_FALSE(dh_public_value_ok(big, pm1));
    EXPECT_FALSE(dh_public_value_ok(big, Bytes(96, 0)));
}

TEST(Dh, PrimesMatchReferenceDerivation)
{
    EXPECT_EQ(to_hex(DhGroup::oakley768().prime), golden::kOakley768Prime);
    EXPECT_EQ(to_hex(DhGroup::modp2048().prime), golden::kModp2048Prime);
    EXPECT_EQ(DhGroup::oakley768().generator, Bytes{2});
    EXPECT_EQ(&DhGroup::by_name("modp2048"), &DhGroup::modp2048());
    EXPECT_THROW(DhGroup::by_name("ecp256"), Error);
}

TEST(Dh, Oakley768MatchesReferenceModexp)
{
    Bytes x(32);
    for (int i = 0; i < 32; ++i)
        x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i + 1);
    auto kp = dh_keypair_from_exponent(DhGroup::oakley768(), x);
    EXPECT_EQ(to_hex(kp.public_value), golden::kOakley768G2ExpX);
}

TEST(Dh, SharedSecretSymmetricOverRandomPairs)
{
    Drbg rng(31, "dh");
    for (const auto *g : {&DhGroup::test23(), &DhGroup::oakley768()}) {
        for (int i = 0; i < 100; ++i) {
            auto a = dh_keypair(*g, rng);
            auto b = dh_keypair(*g, rng);
            ASSERT_EQ(a.public_value.size(), g->width());
            ASSERT_TRUE(dh_public_value_ok(*g, a.public_value));
            EXPECT_EQ(dh_shared(*g, a.secret, b.public_value), dh_shared(*g, b.secret, a.public_value));
        }
    }
    auto a = dh_keypair(DhGroup::modp2048(), rng);
    auto b = dh_keypair(DhGroup::modp2048(), rng);
    EXPECT_EQ(dh_shared(DhGroup::modp2048(), a.secret, b.public_value),
              dh_shared(DhGroup::modp2048(), b.secret, a.public_value));
}

TEST(Dh, KeypairDeterministicFromSeed)
{
    Drbg r1(77, "kp"), r2(77, "kp");
    EXPECT_EQ(dh_keypair(DhGroup::oakley768(), r1).public_value, dh_keypair(DhGroup::oakley768(), r2).public_value);
}

TEST(Suite, IdentifierIsStable)
{
    EXPECT_EQ(suite_id(), "ikeusb-suite-1(prf=hmac-sha256,aead=aes-256-gcm/128,sig=ed25519,kdf=hmac-sha256)");
}
