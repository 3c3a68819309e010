#include "sonir/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace sonir {

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::stderr_color_mt("sonir");
  logger->set_pattern("%^%l%$: %v");
  logger->set_level(spdlog::level::warn);
  return logger;
}

}  // namespace

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = make_logger();
  return *logger;
}

void configure_logging() {
  const char* env = std::getenv("SONIR_LOG");
  const std::string_view level = env ? env : "";
  auto& logger = log();
  if (level == "error") {
    logger.set_level(spdlog::level::err);
  } else if (level == "info") {
    logger.set_level(spdlog::level::info);
  } else if (level == "debug") {
    logger.set_level(spdlog::level::debug);
  } else {
    logger.set_level(spdlog::level::warn);
  }
}

}  // namespace sonir
