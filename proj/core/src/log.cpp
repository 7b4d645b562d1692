#include "pencrit/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace pencrit {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto lg = spdlog::stderr_color_mt("pencrit");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("PENCRIT_LOG"); env != nullptr && *env != '\0') {
      level = spdlog::level::from_str(env);
    }
    lg->set_level(level);
    lg->set_pattern("[%l] %v");
    return lg;
  }();
  return *instance;
}

}  // namespace pencrit
