#pragma once

#include <utility>

#include <spdlog/spdlog.h>

namespace selbayes::logging {

// Reads SELECTIVE_BAYES_LOG (error|info|debug) once; the default level is error.
// Messages go to stderr so report output on stdout stays clean.
void configure_from_environment();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::warn(fmt, std::forward<Args>(args)...);
}

}  // namespace selbayes::logging
