#include "rsica/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace rsica::log {

namespace {
std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;
std::ostream* g_stream = nullptr;
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void set_stream(std::ostream* stream) {
  std::lock_guard lock(g_mutex);
  g_stream = stream;
}

void write(Level lvl, std::string_view message) {
  if (lvl < g_level.load() || lvl == Level::Off) return;
  static constexpr std::string_view kNames[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(g_mutex);
  std::ostream& out = g_stream != nullptr ? *g_stream : std::cerr;
  out << "[rsica] " << kNames[static_cast<int>(lvl)] << ": " << message
            << '\n';
}

}  // namespace rsica::log
