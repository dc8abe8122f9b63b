#pragma once

#include <string>

namespace squat {

// Verbosity is read once from the SQUAT_LOG environment variable:
// "error", "info" (default) or "debug". Messages go to stderr.
enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace squat
