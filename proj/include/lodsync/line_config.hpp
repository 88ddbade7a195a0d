#pragma once

// Helpers for the line-oriented configuration files used across lodsync
// (roles, groups, capacity schedules, scenes, scenarios). Every format
// shares the same lexical rules: '#' starts a comment, blank lines are
// skipped, tokens are separated by whitespace, options are `key=value`.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace lodsync {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& what)
      : std::runtime_error(format(source, line, what)),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, int line,
                            const std::string& what) {
    std::ostringstream os;
    os << source;
    if (line > 0) os << ":" << line;
    os << ": " << what;
    return os.str();
  }

  std::string source_;
  int line_;
};

struct ConfigLine {
  int number = 0;
  std::vector<std::string> tokens;
};

inline std::vector<ConfigLine> tokenize_config(std::string_view text) {
  std::vector<ConfigLine> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    ConfigLine line{number, {}};
    std::istringstream is{std::string(raw)};
    for (std::string tok; is >> tok;) line.tokens.push_back(std::move(tok));
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    pos = end + 1;
  }
  return lines;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Splits `key=value`; returns nullopt when the token has no '='.
inline std::optional<std::pair<std::string, std::string>> split_option(
    const std::string& token) {
  auto eq = token.find('=');
  if (eq == std::string::npos) return std::nullopt;
  return std::pair{token.substr(0, eq), token.substr(eq + 1)};
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // from_chars for double is available in libstdc++ 11.
  double value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace lodsync
