#include "sasreg/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace sasreg::log {
namespace {

Level from_env() {
  const char* env = std::getenv("SASREG_LOG");
  if (env == nullptr) return Level::info;
  const std::string v(env);
  if (v == "debug") return Level::debug;
  if (v == "warn") return Level::warn;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::info;
}

std::atomic<Level>& level_ref() {
  static std::atomic<Level> level{from_env()};
  return level;
}

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    case Level::off: break;
  }
  return "";
}

}  // namespace

Level threshold() { return level_ref().load(); }

void set_threshold(Level level) { level_ref().store(level); }

void write(Level level, std::string_view message) {
  if (level == Level::off || level < threshold()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[sasreg " << tag(level) << "] " << message << '\n';
}

}  // namespace sasreg::log
