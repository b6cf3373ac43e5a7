#pragma once

#include <ostream>
#include <string_view>

namespace rsica::log {

enum class Level { Debug, Info, Warning, Error, Off };

// Process-wide threshold; messages below it are dropped. Default: Info.
void set_level(Level level);
Level level();

// Destination of log lines; nullptr restores stderr.
void set_stream(std::ostream* stream);

// One plain line on stderr: "[rsica] warning: ...".
void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warning, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace rsica::log
