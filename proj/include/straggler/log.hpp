#pragma once

#include <spdlog/spdlog.h>

namespace straggler {

// Library logger. Level comes from STRAGGLER_SIM_LOG (trace, debug, info, warn,
// error, off); unset means warn. Writes to stderr.
spdlog::logger& sim_log();

}  // namespace straggler
