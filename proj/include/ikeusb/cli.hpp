// cli.hpp
//
// ikeusb handshake | attack | matrix
//
// Exit codes: 0 success (or matrix matches the expected pattern), 1 the
// protocol failed, 2 usage or configuration error.

#ifndef IKEUSB_CLI_HPP
#define IKEUSB_CLI_HPP

#include <cstdint>
#include <ostream>

namespace ikeusb::cli {

inline constexpr std::uint64_t kDefaultSeed = 1729;
inline constexpr const char *kSeedEnv = "IKEUSB_SEED";

inline constexpr int kExitOk = 0;
inline constexpr int kExitProtocol = 1;
inline constexpr int kExitUsage = 2;

// IKEUSB_SEED if set and numeric, kDefaultSeed otherwise
std::uint64_t default_seed();

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ikeusb::cli

#endif
