// token.hpp
//
// emulated computer-security USB key
//
// The device's flash is split into a manager region (private key,
// algorithm id, certificate; no host access), a read-only virtual CD and
// a read/write user region.  Every deployment shares one symmetric secret
// key1 across all of its devices; each device has a unique 7-octet serial.
// Secrets stay behind the SecurityToken interface: callers get
// ciphertexts, plaintexts they are entitled to, and signatures.

#ifndef IKEUSB_TOKEN_HPP
#define IKEUSB_TOKEN_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "ikeusb/bytes.hpp"
#include "ikeusb/crypto.hpp"

namespace ikeusb::token {

// throws Error(InvalidSerialLength) unless text is exactly 7 characters
Serial serial_from_string(std::string_view text);
Serial serial_from_bytes(ByteView raw);
std::string serial_to_string(const Serial &serial);

struct DeploymentConfig {
    crypto::SymmetricKey key1;
    std::string signature_scheme = "ed25519";
    std::string cipher = "aes-256-gcm";
    // seeds device key generation so simulations are reproducible
    std::uint64_t keygen_seed = 0;

    // key1 and keygen seed both derived from one number
    static DeploymentConfig from_seed(std::uint64_t seed);
};

// Self-contained certificate: subject, Ed25519 public key, the serial of
// the device that holds the private key, and a self-signature.
//
//   u8 version (1) | u8 subject_len | subject | pubkey[32] | serial[7] | sig[64]
struct Certificate {
    std::string subject;
    crypto::PublicKey public_key;
    Serial serial_binding{};
    Bytes encoded;

    static Certificate issue(std::string_view subject, const crypto::KeyPair &keys, const Serial &serial,
                             const crypto::SignatureScheme &scheme);
    // parses and checks the self-signature; Error(BadCertificate) otherwise
    static Certificate decode(ByteView encoded,
                              const crypto::SignatureScheme &scheme = crypto::default_signature_scheme());

    bool operator==(const Certificate &) const = default;
};

enum class RegionId { ManagerPrivateKey, ManagerAlgorithm, ManagerCertificate, VirtualCd, UserData };
enum class AccessOp { Read, Write };

struct AccessPolicy {
    bool host_read;
    bool host_write;
};

AccessPolicy access_policy(RegionId region);
std::string_view region_name(RegionId region);

inline constexpr RegionId kAllRegions[] = {RegionId::ManagerPrivateKey, RegionId::ManagerAlgorithm,
                                           RegionId::ManagerCertificate, RegionId::VirtualCd,
                                           RegionId::UserData};

enum class KeySelector {
    Key1,         // fleet secret
    OwnSerial,    // kdf_serial(own serial); encrypt only
    PeerSerial,   // kdf_serial(peer serial); decrypt only
    OwnSession,   // kdf_session(key1, own serial); encrypt only
    PeerSession,  // kdf_session(key1, peer serial); decrypt only
};

struct WriteAck {
    bool operator==(const WriteAck &) const = default;
};
using RegionResult = std::variant<Bytes, WriteAck>;

class SecurityToken {
public:
    // InvalidSerialLength unless serial is 7 octets
    static std::shared_ptr<SecurityToken> create(ByteView serial, const DeploymentConfig &deployment,
                                                 std::string_view subject);

    SecurityToken(const SecurityToken &) = delete;
    SecurityToken &operator=(const SecurityToken &) = delete;

    Serial serial() const;
    std::uint8_t algorithm_id() const;

    // nonce || ciphertext || tag under the selected key.  Plaintext must be
    // non-empty; the selector must be Key1, OwnSerial or OwnSession.
    Bytes encrypt(KeySelector key, ByteView plaintext);

    // Selector must be Key1, PeerSerial or PeerSession; the Peer* selectors
    // need peer_serial.  AuthFailure when the tag does not verify,
    // MalformedCiphertext when the input cannot hold nonce and tag.
    Bytes decrypt(KeySelector key, const std::optional<Serial> &peer_serial, ByteView ciphertext);

    Bytes sign(ByteView data);
    Certificate certificate() const;

    // enforces access_policy(); PermissionDenied otherwise
    RegionResult access(RegionId region, AccessOp op, ByteView data = {});

private:
    struct Private {};

public:
    SecurityToken(Private, const Serial &serial, const DeploymentConfig &deployment, std::string_view subject);

private:
    crypto::SymmetricKey key_for_encrypt(KeySelector key) const;
    crypto::SymmetricKey key_for_decrypt(KeySelector key, const std::optional<Serial> &peer) const;

    mutable std::mutex mutex_;
    Serial serial_;
    crypto::SymmetricKey key1_;
    crypto::KeyPair keys_;
    const crypto::Aead *aead_;
    const crypto::SignatureScheme *scheme_;
    Certificate certificate_;
    std::map<RegionId, Bytes> regions_;
    crypto::Drbg rng_;

    friend struct TokenInspector;  // test-only peek at secrets
};

inline std::shared_ptr<SecurityToken> create_token(ByteView serial, const DeploymentConfig &deployment,
                                                   std::string_view subject)
{
    return SecurityToken::create(serial, deployment, subject);
}

// A principal's USB port: holds a token or nothing.  Every device_*
// call on an empty slot throws Error(DeviceAbsent).
class UsbSlot {
public:
    UsbSlot() = default;
    explicit UsbSlot(std::shared_ptr<SecurityToken> token) : token_(std::move(token)) {}

    bool present() const { return token_ != nullptr; }
    SecurityToken &device() const;
    const std::shared_ptr<SecurityToken> &shared() const { return token_; }

private:
    std::shared_ptr<SecurityToken> token_;
};

Serial device_get_serial(const UsbSlot &slot);
Bytes device_encrypt(const UsbSlot &slot, KeySelector key, ByteView plaintext);
Bytes device_decrypt(const UsbSlot &slot, KeySelector key, const std::optional<Serial> &peer_serial,
                     ByteView ciphertext);
Bytes device_sign(const UsbSlot &slot, ByteView data);
Certificate device_get_certificate(const UsbSlot &slot);
RegionResult region_access(const UsbSlot &slot, RegionId region, AccessOp op, ByteView data = {});

// Certificate and private key kept in an ordinary file (a .p12 in the
// field).  This is what the unmodified protocol signs with.
class FileCredential {
public:
    FileCredential(std::string_view subject, crypto::Drbg &rng);

    Bytes sign(ByteView data) const;
    const Certificate &certificate() const { return certificate_; }
    // the on-disk form: private key seed followed by the certificate
    Bytes export_file() const;

private:
    crypto::KeyPair keys_;
    Certificate certificate_;
};

} // namespace ikeusb::token

#endif
