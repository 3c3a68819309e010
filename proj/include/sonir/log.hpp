#pragma once

#include <spdlog/spdlog.h>

namespace sonir {

/// Applies the SONIR_LOG environment variable (error|warn|info|debug) to the
/// shared logger. Unknown or missing values leave the level at "warn".
void configure_logging();

spdlog::logger& log();

}  // namespace sonir
