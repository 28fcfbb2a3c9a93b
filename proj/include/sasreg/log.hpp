#pragma once

#include <string_view>

// Minimal leveled logging to stderr. The threshold comes from SASREG_LOG
// (debug, info, warn, error, off); the default is info.
namespace sasreg::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

Level threshold();
void set_threshold(Level level);
void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void error(std::string_view m) { write(Level::error, m); }

}  // namespace sasreg::log
