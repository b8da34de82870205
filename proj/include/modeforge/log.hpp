#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace modeforge {

/// stderr logger; MODEFORGE_LOG picks the level (trace, debug, info, warn,
/// error, off). Unset or unrecognised values mean info.
inline spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_logger_mt("modeforge");
    l->set_pattern("[%Y-%m-%dT%H:%M:%S] %l: %v");
    auto level = spdlog::level::info;
    if (const char* env = std::getenv("MODEFORGE_LOG")) {
      const auto parsed = spdlog::level::from_str(env);
      if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
    }
    l->set_level(level);
    return l;
  }();
  return *logger;
}

}  // namespace modeforge
