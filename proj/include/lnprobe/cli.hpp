#pragma once

#include <ostream>
#include <span>
#include <string>

#include "lnprobe/errors.hpp"

namespace lnprobe::cli {

// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric/training error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(ErrorKind kind);

// Runs one command line. args[0] is the program name. Reports go to `out`
// unless --output redirects them; diagnostics go to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lnprobe::cli
