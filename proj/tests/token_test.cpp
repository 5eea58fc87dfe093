#include "ikeusb/error.hpp"
#include "ikeusb/token.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace ikeusb;
using namespace ikeusb::token;

namespace ikeusb::token {
// test-only view of a token's secrets
struct TokenInspector {
    static crypto::SymmetricKey key1(const SecurityToken &t) { return t.key1_; }
    static crypto::PrivateKey private_key(const SecurityToken &t) { return t.keys_.private_key; }
};
} // namespace ikeusb::token

namespace {

DeploymentConfig deployment(std::uint64_t seed = 99) { return DeploymentConfig::from_seed(seed); }

std::shared_ptr<SecurityToken> make(std::string_view serial, const DeploymentConfig &d = deployment(),
                                    std::string_view subject = "alice")
{
    return create_token(to_bytes(serial), d, subject);
}

Errc code_of(const std::function<void()> &f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no ikeusb::Error thrown";
    return Errc::ConfigError;
}

} // namespace

TEST(Serial, LengthIsEnforced)
{
    EXPECT_EQ(code_of([] { make("AB1234"); }), Errc::InvalidSerialLength);
    EXPECT_EQ(code_of([] { make("AB123456"); }), Errc::InvalidSerialLength);
    EXPECT_EQ(code_of([] { serial_from_string(""); }), Errc::InvalidSerialLength);
    EXPECT_EQ(serial_to_string(serial_from_string("AB12345")), "AB12345");
    Serial raw{0x00, 0x01, 0xff, 0x10, 0x20, 0x30, 0x40};
    EXPECT_EQ(serial_from_bytes(view(raw)), raw);
}

TEST(Token, SerialStableAcrossCalls)
{
    auto t = make("AB12345");
    const Serial first = t->serial();
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(t->serial(), first);
    EXPECT_EQ(serial_to_string(first), "AB12345");
}

TEST(Token, SharedKey1AcrossDevices)
{
    auto a = make("AB12345");
    auto b = make("CD67890");
    Bytes ct = a->encrypt(KeySelector::Key1, to_bytes("AB12345"));
    EXPECT_EQ(b->decrypt(KeySelector::Key1, std::nullopt, ct), to_bytes("AB12345"));

    auto foreign = make("EF00000", deployment(100));
    EXPECT_EQ(code_of([&] { foreign->decrypt(KeySelector::Key1, std::nullopt, ct); }), Errc::AuthFailure);
}

TEST(Token, FreshNoncePerEncryption)
{
    auto t = make("AB12345");
    Bytes a = t->encrypt(KeySelector::Key1, to_bytes("same"));
    Bytes b = t->encrypt(KeySelector::Key1, to_bytes("same"));
    EXPECT_NE(a, b);
    EXPECT_NE(Bytes(a.begin(), a.begin() + 16), Bytes(b.begin(), b.begin() + 16));
}

TEST(Token, SerialKeysNeedTheRightSerial)
{
    auto a = make("AB12345");
    auto b = make("CD67890");
    Bytes ct = a->encrypt(KeySelector::OwnSerial, to_bytes("certificate"));
    EXPECT_EQ(b->decrypt(KeySelector::PeerSerial, serial_from_string("AB12345"), ct), to_bytes("certificate"));
    EXPECT_EQ(code_of([&] { b->decrypt(KeySelector::PeerSerial, serial_from_string("AB12346"), ct); }),
              Errc::AuthFailure);

    Bytes chain = a->encrypt(KeySelector::OwnSession, to_bytes("chain"));
    EXPECT_EQ(b->decrypt(KeySelector::PeerSession, serial_from_string("AB12345"), chain), to_bytes("chain"));
    // the serial key alone does not open a session blob
    EXPECT_EQ(code_of([&] { b->decrypt(KeySelector::PeerSerial, serial_from_string("AB12345"), chain); }),
              Errc::AuthFailure);
}

TEST(Token, ShortCiphertextIsMalformed)
{
    auto t = make("AB12345");
    EXPECT_EQ(code_of([&] { t->decrypt(KeySelector::Key1, std::nullopt, Bytes{1, 2, 3}); }),
              Errc::MalformedCiphertext);
}

TEST(Token, SelectorMisuseRejected)
{
    auto t = make("AB12345");
    EXPECT_THROW(t->encrypt(KeySelector::PeerSerial, to_bytes("x")), std::invalid_argument);
    EXPECT_THROW(t->decrypt(KeySelector::OwnSession, std::nullopt, Bytes(40)), std::invalid_argument);
    EXPECT_THROW(t->decrypt(KeySelector::PeerSerial, std::nullopt, Bytes(40)), std::invalid_argument);
    EXPECT_THROW(t->encrypt(KeySelector::Key1, {}), std::invalid_argument);
}

TEST(Token, AccessMatrixMatchesPolicy)
{
    auto t = make("AB12345");
    struct Case {
        RegionId region;
        AccessOp op;
        bool allowed;
    };
    const Case cases[] = {
        {RegionId::ManagerPrivateKey, AccessOp::Read, false},  {RegionId::ManagerPrivateKey, AccessOp::Write, false},
        {RegionId::ManagerAlgorithm, AccessOp::Read, false},   {RegionId::ManagerAlgorithm, AccessOp::Write, false},
        {RegionId::ManagerCertificate, AccessOp::Read, false}, {RegionId::ManagerCertificate, AccessOp::Write, false},
        {RegionId::VirtualCd, AccessOp::Read, true},           {RegionId::VirtualCd, AccessOp::Write, false},
        {RegionId::UserData, AccessOp::Read, true},            {RegionId::UserData, AccessOp::Write, true},
    };
    ASSERT_EQ(std::size(cases), std::size(kAllRegions) * 2);
    for (const auto &c : cases) {
        const auto policy = access_policy(c.region);
        EXPECT_EQ(c.op == AccessOp::Read ? policy.host_read : policy.host_write, c.allowed);
        if (c.allowed) {
            EXPECT_NO_THROW(t->access(c.region, c.op, to_bytes("data"))) << region_name(c.region);
        } else {
            EXPECT_EQ(code_of([&] { t->access(c.region, c.op, to_bytes("data")); }), Errc::PermissionDenied)
                << region_name(c.region);
        }
    }
}

TEST(Token, RegionContents)
{
    auto t = make("AB12345");
    auto cd = std::get<Bytes>(t->access(RegionId::VirtualCd, AccessOp::Read));
    EXPECT_FALSE(cd.empty());
    EXPECT_EQ(std::get<Bytes>(t->access(RegionId::UserData, AccessOp::Read)), Bytes{});
    EXPECT_EQ(std::get<WriteAck>(t->access(RegionId::UserData, AccessOp::Write, to_bytes("notes"))), WriteAck{});
    EXPECT_EQ(std::get<Bytes>(t->access(RegionId::UserData, AccessOp::Read)), to_bytes("notes"));
    EXPECT_EQ(t->algorithm_id(), crypto::default_aead().algorithm_code());
}

TEST(Token, SecretsNeverLeaveTheDevice)
{
    auto t = make("AB12345");
    auto key1 = TokenInspector::key1(*t);
    auto sk = TokenInspector::private_key(*t);
    ASSERT_EQ(key1, deployment().key1);

    std::vector<Bytes> outputs;
    for (auto sel : {KeySelector::Key1, KeySelector::OwnSerial, KeySelector::OwnSession})
        for (int i = 0; i < 20; ++i)
            outputs.push_back(t->encrypt(sel, to_bytes("AB12345")));
    outputs.push_back(t->sign(to_bytes("hash")));
    outputs.push_back(t->certificate().encoded);
    for (auto r : kAllRegions)
        for (auto op : {AccessOp::Read, AccessOp::Write})
            try {
                auto res = t->access(r, op);
                if (auto *b = std::get_if<Bytes>(&res))
                    outputs.push_back(*b);
            } catch (const Error &) {
            }
    for (const auto &out : outputs) {
        EXPECT_FALSE(contains_subsequence(out, key1.view()));
        EXPECT_FALSE(contains_subsequence(out, view(sk.seed)));
        // any 8-octet window of either secret
        for (std::size_t i = 0; i + 8 <= 32; i += 8) {
            EXPECT_FALSE(contains_subsequence(out, key1.view().subspan(i, 8)));
            EXPECT_FALSE(contains_subsequence(out, view(sk.seed).subspan(i, 8)));
        }
    }
}

TEST(Token, SignatureVerifiesAgainstCertificate)
{
    auto t = make("AB12345", deployment(), "alice");
    Certificate c = t->certificate();
    EXPECT_EQ(c.subject, "alice");
    EXPECT_EQ(c.serial_binding, serial_from_string("AB12345"));
    Bytes sig = t->sign(to_bytes("HASH_I"));
    EXPECT_TRUE(crypto::verify(c.public_key, to_bytes("HASH_I"), sig));
    EXPECT_EQ(Certificate::decode(c.encoded), c);
}

TEST(Certificate, TamperedEncodingRejected)
{
    auto t = make("AB12345");
    Bytes enc = t->certificate().encoded;
    for (std::size_t i = 0; i < enc.size(); ++i) {
        Bytes bad = enc;
        bad[i] ^= 0x04;
        EXPECT_EQ(code_of([&] { Certificate::decode(bad); }), Errc::BadCertificate) << i;
    }
    EXPECT_EQ(code_of([&] { Certificate::decode(Bytes(enc.begin(), enc.end() - 1)); }), Errc::BadCertificate);
    EXPECT_EQ(code_of([] { Certificate::decode({}); }), Errc::BadCertificate);
}

TEST(Token, KeysAreDeterministicPerDeployment)
{
    auto a = make("AB12345", deployment(5));
    auto b = make("AB12345", deployment(5));
    auto c = make("AB12345", deployment(6));
    EXPECT_EQ(a->certificate(), b->certificate());
    EXPECT_NE(a->certificate().public_key, c->certificate().public_key);
}

TEST(Token, ConcurrentUseIsSerialized)
{
    auto t = make("AB12345");
    std::vector<std::thread> threads;
    std::vector<int> ok(8, 0);
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&, i] {
            for (int k = 0; k < 200; ++k) {
                Bytes ct = t->encrypt(KeySelector::Key1, to_bytes("AB12345"));
                if (t->decrypt(KeySelector::Key1, std::nullopt, ct) == to_bytes("AB12345"))
                    ++ok[static_cast<std::size_t>(i)];
            }
        });
    for (auto &th : threads)
        th.join();
    for (int v : ok)
        EXPECT_EQ(v, 200);
}

TEST(UsbSlot, EmptySlotReportsDeviceAbsent)
{
    UsbSlot empty;
    EXPECT_FALSE(empty.present());
    EXPECT_EQ(code_of([&] { device_get_serial(empty); }), Errc::DeviceAbsent);
    EXPECT_EQ(code_of([&] { device_encrypt(empty, KeySelector::Key1, to_bytes("x")); }), Errc::DeviceAbsent);
    EXPECT_EQ(code_of([&] { device_decrypt(empty, KeySelector::Key1, std::nullopt, Bytes(40)); }),
              Errc::DeviceAbsent);
    EXPECT_EQ(code_of([&] { device_sign(empty, to_bytes("x")); }), Errc::DeviceAbsent);
    EXPECT_EQ(code_of([&] { device_get_certificate(empty); }), Errc::DeviceAbsent);
    EXPECT_EQ(code_of([&] { region_access(empty, RegionId::UserData, AccessOp::Read); }), Errc::DeviceAbsent);

    UsbSlot full(make("AB12345"));
    EXPECT_TRUE(full.present());
    EXPECT_EQ(device_get_serial(full), serial_from_string("AB12345"));
}

TEST(FileCredential, SignsAndExportsItsKey)
{
    crypto::Drbg rng(1, "file");
    FileCredential f("alice", rng);
    Bytes sig = f.sign(to_bytes("HASH_I"));
    EXPECT_TRUE(crypto::verify(f.certificate().public_key, to_bytes("HASH_I"), sig));
    EXPECT_EQ(f.certificate().serial_binding, Serial{});
    // the private key sits in the exported file, unlike a device
    Bytes file = f.export_file();
    EXPECT_TRUE(contains_subsequence(file, f.certificate().encoded));
    EXPECT_EQ(file.size(), 32 + f.certificate().encoded.size());
}
