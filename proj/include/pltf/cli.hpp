#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pltf {

inline constexpr const char* kToolVersion = "pltf 1.0.0";

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,     ///< bad flags, unreadable or malformed input
    kExitNumerical = 2, ///< divergence, stall, loss of positive definiteness
    kExitInternal = 3,  ///< invariant violation, replay mismatch
};

/// Runs one command line (args[0] is the subcommand, no program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace pltf
