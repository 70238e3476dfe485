#pragma once

#include <spdlog/spdlog.h>

namespace cagan {

// Applies CAGAN_LOG={quiet,info,debug} (default info) to the default logger,
// which writes to stderr.
void init_logging();

}  // namespace cagan
