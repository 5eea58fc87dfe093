// error.hpp
//
// one error type for the library; the code says what went wrong and,
// for wire parsing, the offset says where

#ifndef IKEUSB_ERROR_HPP
#define IKEUSB_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ikeusb {

enum class Errc {
    // token
    InvalidSerialLength,
    DeviceAbsent,
    AuthFailure,
    MalformedCiphertext,
    PermissionDenied,
    BadCertificate,
    // crypto
    WeakPublicValue,
    // codec
    Truncated,
    BadVersion,
    BadExchangeType,
    BadLength,
    UnknownPayloadType,
    NonzeroReserved,
    ChainMismatch,
    // netsim / cli
    SelectorMiss,
    ConfigError,
    IncompleteTrace,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what);
    Error(Errc code, std::size_t offset, const std::string &what);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::optional<std::size_t> offset_;
};

} // namespace ikeusb

#endif
