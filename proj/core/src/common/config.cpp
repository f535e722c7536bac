#include "kite/common/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"

namespace kite {
namespace {

ConfigEntry split_entry(std::string_view line, std::size_t line_no) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key = value, got '" + std::string(line) + "'" +
                      (line_no ? " (line " + std::to_string(line_no) + ")" : ""));
  }
  ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
  if (e.key.empty()) throw ConfigError("empty config key" + (line_no ? " (line " + std::to_string(line_no) + ")" : ""));
  return e;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* what) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + what);
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    out.push_back(split_entry(line, line_no));
  }
  return out;
}

ConfigEntry parse_override(std::string_view text) { return split_entry(trim(text), 0); }

std::uint64_t config_u64(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end || value.empty()) bad(key, value, "a non-negative integer");
  return v;
}

std::size_t config_size(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(config_u64(key, value));
}

double config_real(std::string_view key, std::string_view value) {
  std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) bad(key, value, "a finite number");
  return v;
}

bool config_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad(key, value, "true or false");
}

}  // namespace kite
