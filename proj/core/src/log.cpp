#include "squat/log.hpp"

#include <cstdio>
#include <cstdlib>

namespace squat {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SQUAT_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {

void emit(const char* tag, const std::string& msg) {
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace

void log_error(const std::string& msg) {
  emit("error", msg);
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) emit("debug", msg);
}

}  // namespace squat
