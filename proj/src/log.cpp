#include "bsodiag/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace bsodiag::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

std::string_view name(Level l) {
  switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    case Level::off: return "off";
  }
  return "info";
}
}  // namespace

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

void write(Level l, std::string_view message) {
  if (l < g_level.load()) return;
  std::string escaped;
  escaped.reserve(message.size());
  for (char c : message) {
    if (c == '"' || c == '\\') escaped.push_back('\\');
    escaped.push_back(c == '\n' ? ' ' : c);
  }
  std::lock_guard lock(g_mutex);
  std::cerr << "level=" << name(l) << " msg=\"" << escaped << "\"\n";
}

}  // namespace bsodiag::log
