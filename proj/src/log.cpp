// SPDX-License-Identifier: Apache-2.0
#include "gruc/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace gruc::log {
namespace {

Level initial_level() {
  if (const char* env = std::getenv("GRUC_LOG")) {
    const std::string v(env);
    if (v == "debug") return Level::kDebug;
    if (v == "warn") return Level::kWarn;
    if (v == "error") return Level::kError;
    if (v == "off") return Level::kOff;
  }
  return Level::kInfo;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{initial_level()};
  return lvl;
}

constexpr const char* kTags[] = {"debug", "info", "warn", "error"};

}  // namespace

void set_level(Level level) { current().store(level); }
Level level() { return current().load(); }

void write(Level lvl, std::string_view message) {
  if (lvl < level() || lvl == Level::kOff) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[" << kTags[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace gruc::log
