#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace pencrit {

/// Library logger (stderr). Level comes from PENCRIT_LOG
/// (trace, debug, info, warn, error, off); default warn.
[[nodiscard]] spdlog::logger& logger();

}  // namespace pencrit
