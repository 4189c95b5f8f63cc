#include "uavfl/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace uavfl::log {

Level level() {
  static const Level lvl = [] {
    const char* env = std::getenv("UAVFL_LOG");
    const std::string v = env != nullptr ? env : "info";
    if (v == "quiet" || v == "0") return Level::quiet;
    if (v == "debug" || v == "2") return Level::debug;
    return Level::info;
  }();
  return lvl;
}

void info(std::string_view message) {
  if (level() >= Level::info) std::cerr << "[uavfl] " << message << '\n';
}

void debug(std::string_view message) {
  if (level() >= Level::debug) std::cerr << "[uavfl:debug] " << message << '\n';
}

}  // namespace uavfl::log
