// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace gruc::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

/// Messages below this level are dropped. Default kInfo; GRUC_LOG overrides.
void set_level(Level level);
Level level();

void write(Level level, std::string_view message);
inline void info(std::string_view m) { write(Level::kInfo, m); }
inline void warn(std::string_view m) { write(Level::kWarn, m); }
inline void debug(std::string_view m) { write(Level::kDebug, m); }

}  // namespace gruc::log
