#include "gssl/log.hpp"

#include <iostream>
#include <mutex>

namespace gssl::log {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& current_sink() {
  static Sink sink = [](Level level, const std::string& msg) {
    if (level == Level::warn) std::cerr << "warning: " << msg << '\n';
    if (level == Level::error) std::cerr << "error: " << msg << '\n';
  };
  return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  std::swap(current_sink(), sink);
  return sink;
}

void write(Level level, const std::string& msg) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, msg);
}

}  // namespace gssl::log
