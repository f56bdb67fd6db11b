#include "iegds/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace iegds::log {

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static std::once_flag once;
    static std::shared_ptr<spdlog::logger> lg;
    std::call_once(once, [] {
        lg = spdlog::stderr_color_mt("iegds");
        lg->set_pattern("[%l] %v");
        lg->set_level(spdlog::level::warn);
    });
    return lg;
}

}  // namespace

void set_level(const std::string& level) {
    const auto lv = spdlog::level::from_str(level);
    // from_str maps unknown names to off
    if (lv == spdlog::level::off && level != "off") throw std::invalid_argument("unknown log level: " + level);
    logger()->set_level(lv);
}

void init_from_env() {
    const char* v = std::getenv("IEGDS_LOG");
    if (v && *v) set_level(v);
}

void debug(const std::string& msg) { logger()->debug(msg); }
void info(const std::string& msg) { logger()->info(msg); }
void warn(const std::string& msg) { logger()->warn(msg); }
void error(const std::string& msg) { logger()->error(msg); }

}  // namespace iegds::log
