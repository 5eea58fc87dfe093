// dh.hpp
//
// finite-field Diffie-Hellman over MODP groups

#ifndef IKEUSB_DH_HPP
#define IKEUSB_DH_HPP

#include <string>
#include <string_view>

#include "ikeusb/bytes.hpp"
#include "ikeusb/crypto.hpp"

namespace ikeusb::crypto {

struct DhGroup {
    std::string name;
    Bytes prime;      // big-endian
    Bytes generator;  // big-endian
    // private exponent size; 0 draws from the whole range [2, p-2]
    std::size_t exponent_bits = 0;

    // public values and shared secrets are this many octets
    std::size_t width() const { return prime.size(); }

    // p = 23, g = 2; only for hand-checkable tests
    static const DhGroup &test23();
    // 768-bit Oakley group 1, used by the simulator
    static const DhGroup &oakley768();
    // 2048-bit MODP group 14
    static const DhGroup &modp2048();
    // "test23", "oakley768" or "modp2048"; ConfigError otherwise
    static const DhGroup &by_name(std::string_view name);
};

struct DhKeypair {
    Bytes secret;        // private exponent
    Bytes public_value;  // g^x mod p, width() octets
};

// draws x from rng and returns (x, g^x mod p); redraws while g^x falls
// outside [2, p-2]
DhKeypair dh_keypair(const DhGroup &group, Drbg &rng);

// fixed exponent, for tests
DhKeypair dh_keypair_from_exponent(const DhGroup &group, ByteView secret);

// true iff 2 <= value <= p-2
bool dh_public_value_ok(const DhGroup &group, ByteView value);

// (peer)^x mod p as width() octets; WeakPublicValue unless peer in [2, p-2]
Bytes dh_shared(const DhGroup &group, ByteView secret, ByteView peer_public);

} // namespace ikeusb::crypto

#endif
