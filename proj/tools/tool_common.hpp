#pragma once

// Shared plumbing for the command-line tools: signal-driven stop flag and
// the machine-readable error line printed before a nonzero exit.

#include <csignal>

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <string_view>
#include <system_error>

#include "lodsync/line_config.hpp"

namespace lodsync::tools {

inline std::atomic<bool> g_stop{false};

inline void install_stop_handlers() {
  auto handler = [](int) { g_stop.store(true); };
  std::signal(SIGINT, handler);
  std::signal(SIGTERM, handler);
}

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsage = 2, kPortConflict = 3, kConfigError = 4 };

/// Prints `error,<kind>,<message>` on stderr and returns the exit code.
inline int fail(std::string_view kind, const std::string& message, int code) {
  std::string clean = message;
  for (auto& ch : clean) {
    if (ch == '\n' || ch == ',') ch = ' ';
  }
  std::cerr << "error," << kind << ',' << clean << '\n';
  return code;
}

/// Maps an in-flight exception to an error line and exit status.
inline int report_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kConfigError);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what(), kRuntimeError);
  } catch (const std::system_error& e) {
    if (e.code() == std::errc::address_in_use) return fail("port_conflict", e.what(), kPortConflict);
    return fail("system", e.what(), kRuntimeError);
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kRuntimeError);
  }
}

}  // namespace lodsync::tools
