// bytes.hpp
//
// byte-buffer helpers shared by every module

#ifndef IKEUSB_BYTES_HPP
#define IKEUSB_BYTES_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ikeusb {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// device serial numbers are always seven octets
inline constexpr std::size_t kSerialSize = 7;
using Serial = std::array<std::uint8_t, kSerialSize>;

std::string to_hex(ByteView data);

// Accepts upper or lower case, ignores whitespace. Throws
// std::invalid_argument on odd length or a non-hex character.
Bytes from_hex(std::string_view hex);

Bytes to_bytes(std::string_view text);

inline ByteView view(const Bytes &b) { return {b.data(), b.size()}; }

template <std::size_t N>
ByteView view(const std::array<std::uint8_t, N> &a) { return {a.data(), a.size()}; }

// concatenation used when building PRF inputs
Bytes concat(std::initializer_list<ByteView> parts);

void append(Bytes &out, ByteView data);
void append_u8(Bytes &out, std::uint8_t v);
void append_u16(Bytes &out, std::uint16_t v);
void append_u32(Bytes &out, std::uint32_t v);

std::uint16_t load_u16(ByteView data, std::size_t offset);
std::uint32_t load_u32(ByteView data, std::size_t offset);

// true iff needle occurs contiguously inside haystack
bool contains_subsequence(ByteView haystack, ByteView needle);

} // namespace ikeusb

#endif
