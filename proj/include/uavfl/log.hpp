#pragma once

#include <string_view>

namespace uavfl::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

/// Read once from UAVFL_LOG ("quiet", "info", "debug"); defaults to info.
Level level();
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace uavfl::log
