#pragma once

#include <string>

namespace iegds::log {

// Reads IEGDS_LOG (trace, debug, info, warn, error, off); defaults to warn.
void init_from_env();
// Throws std::invalid_argument for an unknown level name.
void set_level(const std::string& level);

void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);

}  // namespace iegds::log
