#include "ikeusb/token.hpp"
#include "ikeusb/error.hpp"

namespace ikeusb::token {

namespace {

constexpr std::uint8_t kCertVersion = 1;
constexpr std::size_t kSignatureSize = 64;

const std::string_view kVirtualCdImage = "IKEUSB-VCD/1 client installer and readme";

Bytes cert_tbs(std::string_view subject, const crypto::PublicKey &pub, const Serial &serial)
{
    if (subject.empty() || subject.size() > 255)
        throw Error(Errc::BadCertificate, "subject must be 1..255 octets");
    Bytes out;
    append_u8(out, kCertVersion);
    append_u8(out, static_cast<std::uint8_t>(subject.size()));
    append(out, to_bytes(subject));
    append(out, view(pub.bytes));
    append(out, view(serial));
    return out;
}

std::string label_for(std::string_view prefix, const Serial &serial)
{
    return std::string(prefix) + serial_to_string(serial);
}

} // namespace

Serial serial_from_bytes(ByteView raw)
{
    if (raw.size() != kSerialSize)
        throw Error(Errc::InvalidSerialLength, "serial must be 7 octets, got " + std::to_string(raw.size()));
    Serial s{};
    std::copy(raw.begin(), raw.end(), s.begin());
    return s;
}

Serial serial_from_string(std::string_view text)
{
    return serial_from_bytes({reinterpret_cast<const std::uint8_t *>(text.data()), text.size()});
}

std::string serial_to_string(const Serial &serial)
{
    bool printable = std::all_of(serial.begin(), serial.end(), [](std::uint8_t c) { return c >= 0x20 && c < 0x7f; });
    if (printable)
        return std::string(serial.begin(), serial.end());
    return to_hex(view(serial));
}

DeploymentConfig DeploymentConfig::from_seed(std::uint64_t seed)
{
    crypto::Drbg rng(seed, "deployment");
    DeploymentConfig d;
    rng.fill(d.key1.bytes);
    d.keygen_seed = rng.next_u64();
    return d;
}

// --- Certificate --------------------------------------------------------------

Certificate Certificate::issue(std::string_view subject, const crypto::KeyPair &keys, const Serial &serial,
                               const crypto::SignatureScheme &scheme)
{
    Certificate c;
    c.subject = std::string(subject);
    c.public_key = keys.public_key;
    c.serial_binding = serial;
    c.encoded = cert_tbs(subject, keys.public_key, serial);
    Bytes sig = scheme.sign(keys.private_key, c.encoded);
    append(c.encoded, sig);
    return c;
}

Certificate Certificate::decode(ByteView encoded, const crypto::SignatureScheme &scheme)
{
    if (encoded.size() < 2)
        throw Error(Errc::BadCertificate, "too short");
    if (encoded[0] != kCertVersion)
        throw Error(Errc::BadCertificate, "unknown certificate version");
    const std::size_t subject_len = encoded[1];
    const std::size_t tbs_len = 2 + subject_len + 32 + kSerialSize;
    if (subject_len == 0 || encoded.size() != tbs_len + kSignatureSize)
        throw Error(Errc::BadCertificate, "length mismatch");

    Certificate c;
    c.subject.assign(encoded.begin() + 2, encoded.begin() + 2 + static_cast<std::ptrdiff_t>(subject_len));
    auto pk = encoded.subspan(2 + subject_len, 32);
    std::copy(pk.begin(), pk.end(), c.public_key.bytes.begin());
    auto serial = encoded.subspan(2 + subject_len + 32, kSerialSize);
    std::copy(serial.begin(), serial.end(), c.serial_binding.begin());
    c.encoded.assign(encoded.begin(), encoded.end());

    if (!scheme.verify(c.public_key, encoded.first(tbs_len), encoded.subspan(tbs_len)))
        throw Error(Errc::BadCertificate, "self-signature does not verify");
    return c;
}

// --- access policy ------------------------------------------------------------

AccessPolicy access_policy(RegionId region)
{
    switch (region) {
    case RegionId::ManagerPrivateKey:
    case RegionId::ManagerAlgorithm:
    case RegionId::ManagerCertificate:
        return {false, false};
    case RegionId::VirtualCd:
        return {true, false};
    case RegionId::UserData:
        return {true, true};
    }
    return {false, false};
}

std::string_view region_name(RegionId region)
{
    switch (region) {
    case RegionId::ManagerPrivateKey: return "manager/private-key";
    case RegionId::ManagerAlgorithm: return "manager/algorithm";
    case RegionId::ManagerCertificate: return "manager/certificate";
    case RegionId::VirtualCd: return "virtual-cd";
    case RegionId::UserData: return "user";
    }
    return "?";
}

// --- SecurityToken ------------------------------------------------------------

std::shared_ptr<SecurityToken> SecurityToken::create(ByteView serial, const DeploymentConfig &deployment,
                                                     std::string_view subject)
{
    return std::make_shared<SecurityToken>(Private{}, serial_from_bytes(serial), deployment, subject);
}

SecurityToken::SecurityToken(Private, const Serial &serial, const DeploymentConfig &deployment,
                             std::string_view subject)
    : serial_(serial), key1_(deployment.key1), aead_(&crypto::aead_by_id(deployment.cipher)),
      scheme_(&crypto::signature_scheme_by_id(deployment.signature_scheme)),
      rng_(deployment.keygen_seed, label_for("token-nonce:", serial))
{
    crypto::Drbg keygen(deployment.keygen_seed, label_for("token-keygen:", serial));
    keys_ = scheme_->keypair(keygen);
    certificate_ = Certificate::issue(subject, keys_, serial_, *scheme_);

    regions_[RegionId::ManagerPrivateKey] = concat({key1_.view(), view(keys_.private_key.seed)});
    regions_[RegionId::ManagerAlgorithm] = Bytes{aead_->algorithm_code()};
    regions_[RegionId::ManagerCertificate] = certificate_.encoded;
    regions_[RegionId::VirtualCd] = to_bytes(kVirtualCdImage);
    regions_[RegionId::UserData] = Bytes{};
}

Serial SecurityToken::serial() const
{
    std::lock_guard lock(mutex_);
    return serial_;
}

std::uint8_t SecurityToken::algorithm_id() const
{
    std::lock_guard lock(mutex_);
    return regions_.at(RegionId::ManagerAlgorithm).at(0);
}

crypto::SymmetricKey SecurityToken::key_for_encrypt(KeySelector key) const
{
    switch (key) {
    case KeySelector::Key1: return key1_;
    case KeySelector::OwnSerial: return crypto::kdf_serial(view(serial_));
    case KeySelector::OwnSession: return crypto::kdf_session(key1_, view(serial_));
    default: throw std::invalid_argument("encrypt: selector must be Key1, OwnSerial or OwnSession");
    }
}

crypto::SymmetricKey SecurityToken::key_for_decrypt(KeySelector key, const std::optional<Serial> &peer) const
{
    switch (key) {
    case KeySelector::Key1: return key1_;
    case KeySelector::PeerSerial:
    case KeySelector::PeerSession:
        if (!peer)
            throw std::invalid_argument("decrypt: peer selector without a peer serial");
        return key == KeySelector::PeerSerial ? crypto::kdf_serial(view(*peer))
                                              : crypto::kdf_session(key1_, view(*peer));
    default: throw std::invalid_argument("decrypt: selector must be Key1, PeerSerial or PeerSession");
    }
}

Bytes SecurityToken::encrypt(KeySelector key, ByteView plaintext)
{
    if (plaintext.empty())
        throw std::invalid_argument("encrypt: empty plaintext");
    std::lock_guard lock(mutex_);
    return crypto::seal_blob(*aead_, key_for_encrypt(key), plaintext, rng_);
}

Bytes SecurityToken::decrypt(KeySelector key, const std::optional<Serial> &peer_serial, ByteView ciphertext)
{
    std::lock_guard lock(mutex_);
    auto k = key_for_decrypt(key, peer_serial);
    return crypto::open_blob(*aead_, k, ciphertext);
}

Bytes SecurityToken::sign(ByteView data)
{
    if (data.empty())
        throw std::invalid_argument("sign: empty data");
    std::lock_guard lock(mutex_);
    return scheme_->sign(keys_.private_key, data);
}

Certificate SecurityToken::certificate() const
{
    std::lock_guard lock(mutex_);
    return certificate_;
}

RegionResult SecurityToken::access(RegionId region, AccessOp op, ByteView data)
{
    std::lock_guard lock(mutex_);
    const AccessPolicy policy = access_policy(region);
    const std::string what = std::string(op == AccessOp::Read ? "read" : "write") + " of " +
                             std::string(region_name(region));
    if (op == AccessOp::Read) {
        if (!policy.host_read)
            throw Error(Errc::PermissionDenied, what);
        return regions_.at(region);
    }
    if (!policy.host_write)
        throw Error(Errc::PermissionDenied, what);
    regions_[region].assign(data.begin(), data.end());
    return WriteAck{};
}

// --- UsbSlot --------------------------------------------------------------------

SecurityToken &UsbSlot::device() const
{
    if (!token_)
        throw Error(Errc::DeviceAbsent, "no security key in this principal's USB slot");
    return *token_;
}

Serial device_get_serial(const UsbSlot &slot) { return slot.device().serial(); }

Bytes device_encrypt(const UsbSlot &slot, KeySelector key, ByteView plaintext)
{
    return slot.device().encrypt(key, plaintext);
}

Bytes device_decrypt(const UsbSlot &slot, KeySelector key, const std::optional<Serial> &peer_serial,
                     ByteView ciphertext)
{
    return slot.device().decrypt(key, peer_serial, ciphertext);
}

Bytes device_sign(const UsbSlot &slot, ByteView data) { return slot.device().sign(data); }

Certificate device_get_certificate(const UsbSlot &slot) { return slot.device().certificate(); }

RegionResult region_access(const UsbSlot &slot, RegionId region, AccessOp op, ByteView data)
{
    return slot.device().access(region, op, data);
}

// --- FileCredential -------------------------------------------------------------

FileCredential::FileCredential(std::string_view subject, crypto::Drbg &rng)
    : keys_(crypto::default_signature_scheme().keypair(rng)),
      certificate_(Certificate::issue(subject, keys_, Serial{}, crypto::default_signature_scheme()))
{
}

Bytes FileCredential::sign(ByteView data) const
{
    return crypto::default_signature_scheme().sign(keys_.private_key, data);
}

Bytes FileCredential::export_file() const
{
    return concat({view(keys_.private_key.seed), view(certificate_.encoded)});
}

} // namespace ikeusb::token
