/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

namespace asd {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Level comes from ASD_LOG={error|info|debug}; default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ASD_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void log_at(LogLevel level, const char* tag, const std::string& msg) {
  if (level > log_level()) return;
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

#define ASD_LOG_ERROR(msg)                              \
  do {                                                  \
    std::ostringstream os_;                             \
    os_ << msg;                                         \
    ::asd::log_at(::asd::LogLevel::kError, "error", os_.str()); \
  } while (0)

#define ASD_LOG_INFO(msg)                               \
  do {                                                  \
    std::ostringstream os_;                             \
    os_ << msg;                                         \
    ::asd::log_at(::asd::LogLevel::kInfo, "info", os_.str()); \
  } while (0)

#define ASD_LOG_DEBUG(msg)                              \
  do {                                                  \
    std::ostringstream os_;                             \
    os_ << msg;                                         \
    ::asd::log_at(::asd::LogLevel::kDebug, "debug", os_.str()); \
  } while (0)

}  // namespace asd
