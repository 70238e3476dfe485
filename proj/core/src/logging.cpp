#include "cagan/logging.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace cagan {

void init_logging() {
  static bool initialized = false;
  if (!initialized) {
    auto logger = spdlog::stderr_color_mt("cagan");
    logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
    spdlog::set_default_logger(logger);
    initialized = true;
  }
  const char* env = std::getenv("CAGAN_LOG");
  const std::string_view level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace cagan
