#pragma once

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace floodbench::util {

// Shared stderr logger. Verbosity comes from FLOODBENCH_LOG
// (trace|debug|info|warn|error|off), default warn.
inline spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("floodbench");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("FLOODBENCH_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *instance;
}

}  // namespace floodbench::util
