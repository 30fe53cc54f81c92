#pragma once

#include <spdlog/spdlog.h>

namespace psi {

// Shared logger. Level comes from the PSI_LOG environment variable
// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

}  // namespace psi
