#include "ikeusb/dh.hpp"
#include "ikeusb/error.hpp"

#include <memory>

#include <openssl/bn.h>

namespace ikeusb::crypto {

namespace {

struct BnDeleter {
    void operator()(BIGNUM *b) const { BN_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnDeleter>;

struct BnCtxDeleter {
    void operator()(BN_CTX *c) const { BN_CTX_free(c); }
};
using BnCtx = std::unique_ptr<BN_CTX, BnCtxDeleter>;

Bn to_bn(ByteView bytes)
{
    Bn b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!b)
        throw std::runtime_error("openssl: BN_bin2bn");
    return b;
}

Bytes from_bn(const BIGNUM *b, std::size_t width)
{
    Bytes out(width);
    if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0)
        throw std::runtime_error("openssl: BN_bn2binpad");
    return out;
}

Bytes bn_bytes(BIGNUM *(*getter)(BIGNUM *))
{
    Bn p(getter(nullptr));
    Bytes out(static_cast<std::size_t>(BN_num_bytes(p.get())));
    BN_bn2bin(p.get(), out.data());
    return out;
}

Bytes mod_exp(const DhGroup &group, ByteView base, ByteView exponent)
{
    BnCtx ctx(BN_CTX_new());
    Bn p = to_bn(group.prime);
    Bn b = to_bn(base);
    Bn e = to_bn(exponent);
    Bn r(BN_new());
    if (!ctx || !r || BN_mod_exp(r.get(), b.get(), e.get(), p.get(), ctx.get()) != 1)
        throw std::runtime_error("openssl: BN_mod_exp");
    return from_bn(r.get(), group.width());
}

DhGroup make_group(std::string name, Bytes prime, std::size_t exponent_bits)
{
    DhGroup g;
    g.name = std::move(name);
    g.prime = std::move(prime);
    g.generator = Bytes{2};
    g.exponent_bits = exponent_bits;
    return g;
}

} // namespace

const DhGroup &DhGroup::test23()
{
    static const DhGroup g = make_group("test23", Bytes{23}, 0);
    return g;
}

const DhGroup &DhGroup::oakley768()
{
    static const DhGroup g = make_group("oakley768", bn_bytes(BN_get_rfc2409_prime_768), 0);
    return g;
}

const DhGroup &DhGroup::modp2048()
{
    static const DhGroup g = make_group("modp2048", bn_bytes(BN_get_rfc3526_prime_2048), 256);
    return g;
}

const DhGroup &DhGroup::by_name(std::string_view name)
{
    if (name == "test23")
        return test23();
    if (name == "oakley768")
        return oakley768();
    if (name == "modp2048")
        return modp2048();
    throw Error(Errc::ConfigError, "unknown DH group '" + std::string(name) + "'");
}

bool dh_public_value_ok(const DhGroup &group, ByteView value)
{
    Bn v = to_bn(value);
    Bn limit = to_bn(group.prime);
    if (!BN_sub_word(limit.get(), 2))
        throw std::runtime_error("openssl: BN_sub_word");
    return BN_cmp(v.get(), BN_value_one()) > 0 && BN_cmp(v.get(), limit.get()) <= 0;
}

DhKeypair dh_keypair_from_exponent(const DhGroup &group, ByteView secret)
{
    DhKeypair kp;
    kp.secret.assign(secret.begin(), secret.end());
    kp.public_value = mod_exp(group, group.generator, secret);
    return kp;
}

DhKeypair dh_keypair(const DhGroup &group, Drbg &rng)
{
    BnCtx ctx(BN_CTX_new());
    Bn p = to_bn(group.prime);
    // exponents are drawn from [2, p-2]
    Bn span_(BN_dup(p.get()));
    BN_sub_word(span_.get(), 3);

    for (;;) {
        Bn x;
        if (group.exponent_bits > 0) {
            Bytes raw = rng.bytes((group.exponent_bits + 7) / 8);
            x = to_bn(raw);
            BN_set_bit(x.get(), static_cast<int>(group.exponent_bits) - 1);
        } else {
            Bytes raw = rng.bytes(group.width() + 8);
            Bn wide = to_bn(raw);
            x.reset(BN_new());
            BN_mod(x.get(), wide.get(), span_.get(), ctx.get());
            BN_add_word(x.get(), 2);
        }
        Bytes secret(static_cast<std::size_t>(BN_num_bytes(x.get())));
        BN_bn2bin(x.get(), secret.data());

        DhKeypair kp = dh_keypair_from_exponent(group, secret);
        if (dh_public_value_ok(group, kp.public_value))
            return kp;
    }
}

Bytes dh_shared(const DhGroup &group, ByteView secret, ByteView peer_public)
{
    if (!dh_public_value_ok(group, peer_public))
        throw Error(Errc::WeakPublicValue, "peer public value outside [2, p-2]");
    return mod_exp(group, peer_public, secret);
}

} // namespace ikeusb::crypto
