#include "ikeusb/bytes.hpp"
#include "ikeusb/error.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace ikeusb {

std::string to_hex(ByteView data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {

int nibble(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

} // namespace

Bytes from_hex(std::string_view hex)
{
    Bytes out;
    int high = -1;
    for (char c : hex) {
        if (std::isspace(static_cast<unsigned char>(c)))
            continue;
        int v = nibble(c);
        if (v < 0)
            throw std::invalid_argument("from_hex: not a hex digit");
        if (high < 0) {
            high = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((high << 4) | v));
            high = -1;
        }
    }
    if (high >= 0)
        throw std::invalid_argument("from_hex: odd number of digits");
    return out;
}

Bytes to_bytes(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

Bytes concat(std::initializer_list<ByteView> parts)
{
    std::size_t total = 0;
    for (auto p : parts)
        total += p.size();
    Bytes out;
    out.reserve(total);
    for (auto p : parts)
        out.insert(out.end(), p.begin(), p.end());
    return out;
}

void append(Bytes &out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

void append_u8(Bytes &out, std::uint8_t v) { out.push_back(v); }

void append_u16(Bytes &out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_u32(Bytes &out, std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint16_t load_u16(ByteView data, std::size_t offset)
{
    return static_cast<std::uint16_t>((data[offset] << 8) | data[offset + 1]);
}

std::uint32_t load_u32(ByteView data, std::size_t offset)
{
    return (std::uint32_t{data[offset]} << 24) | (std::uint32_t{data[offset + 1]} << 16) |
           (std::uint32_t{data[offset + 2]} << 8) | std::uint32_t{data[offset + 3]};
}

bool contains_subsequence(ByteView haystack, ByteView needle)
{
    if (needle.empty())
        return true;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

// --- Error ------------------------------------------------------------------

std::string_view errc_name(Errc code)
{
    switch (code) {
    case Errc::InvalidSerialLength: return "InvalidSerialLength";
    case Errc::DeviceAbsent: return "DeviceAbsent";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::MalformedCiphertext: return "MalformedCiphertext";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::BadCertificate: return "BadCertificate";
    case Errc::WeakPublicValue: return "WeakPublicValue";
    case Errc::Truncated: return "Truncated";
    case Errc::BadVersion: return "BadVersion";
    case Errc::BadExchangeType: return "BadExchangeType";
    case Errc::BadLength: return "BadLength";
    case Errc::UnknownPayloadType: return "UnknownPayloadType";
    case Errc::NonzeroReserved: return "NonzeroReserved";
    case Errc::ChainMismatch: return "ChainMismatch";
    case Errc::SelectorMiss: return "SelectorMiss";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IncompleteTrace: return "IncompleteTrace";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string &what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
{
}

Error::Error(Errc code, std::size_t offset, const std::string &what)
    : std::runtime_error(std::string(errc_name(code)) + " at offset " + std::to_string(offset) + ": " + what),
      code_(code), offset_(offset)
{
}

} // namespace ikeusb
