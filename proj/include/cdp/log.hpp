#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace cdp::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level parse_level(std::string_view s, Level fallback = Level::warn) {
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "warn" || s == "warning") return Level::warn;
    if (s == "error") return Level::error;
    if (s == "off" || s == "none") return Level::off;
    return fallback;
}

namespace detail {
struct Sink {
    Level level;
    std::mutex mutex;
    Sink() {
        const char* env = std::getenv("CDP_LOG_LEVEL");
        level = env ? parse_level(env) : Level::warn;
    }
};
inline Sink& sink() {
    static Sink s;
    return s;
}
}  // namespace detail

inline void set_level(Level l) { detail::sink().level = l; }
inline Level level() { return detail::sink().level; }
inline bool enabled(Level l) { return l >= detail::sink().level && l != Level::off; }

inline void write(Level l, const std::string& msg) {
    if (!enabled(l)) return;
    static constexpr const char* names[] = {"debug", "info", "warn", "error"};
    auto& s = detail::sink();
    std::lock_guard lock(s.mutex);
    std::cerr << "[cdp " << names[static_cast<int>(l)] << "] " << msg << '\n';
}

template <typename... Args>
void emit(Level l, const Args&... args) {
    if (!enabled(l)) return;
    std::ostringstream os;
    (os << ... << args);
    write(l, os.str());
}

template <typename... Args> void debug(const Args&... a) { emit(Level::debug, a...); }
template <typename... Args> void info(const Args&... a) { emit(Level::info, a...); }
template <typename... Args> void warn(const Args&... a) { emit(Level::warn, a...); }
template <typename... Args> void error(const Args&... a) { emit(Level::error, a...); }

}  // namespace cdp::log
