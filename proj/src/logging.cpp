#include "selbayes/logging.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace selbayes::logging {

void configure_from_environment() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("selbayes");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::level::level_enum level = spdlog::level::err;
    if (const char* env = std::getenv("SELECTIVE_BAYES_LOG")) {
      const std::string value(env);
      if (value == "debug") level = spdlog::level::debug;
      else if (value == "info") level = spdlog::level::info;
    }
    spdlog::set_level(level);
  });
}

}  // namespace selbayes::logging
