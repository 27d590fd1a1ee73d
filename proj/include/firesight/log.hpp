#pragma once

#include <string>

namespace firesight {

enum class LogLevel { Debug, Info, Warn, Error, Off };

void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;
// One line to stderr, prefixed with a monotonic timestamp and level.
void log(LogLevel level, const std::string& message);

}  // namespace firesight
