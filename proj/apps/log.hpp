#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

// Log level from CREW_LOG: trace, debug, info (default), warn, error, off.
inline void init_logging() {
  const char* env = std::getenv("CREW_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
}
