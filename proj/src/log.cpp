#include "firesight/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>

namespace firesight {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_mutex;
const auto g_start = std::chrono::steady_clock::now();
}  // namespace

void set_log_level(LogLevel level) noexcept { g_level = level; }
LogLevel log_level() noexcept { return g_level; }

void log(LogLevel level, const std::string& message) {
    if (level < g_level.load() || level == LogLevel::Off) return;
    static constexpr const char* names[] = {"debug", "info", "warn", "error"};
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[%10.3f] %-5s %s\n", t, names[static_cast<int>(level)], message.c_str());
}

}  // namespace firesight
