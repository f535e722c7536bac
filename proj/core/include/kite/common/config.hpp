#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kite {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for command-line overrides
};

// `key = value` lines; blank lines and `#` comments are skipped. Throws
// ConfigError with the line number on anything else.
std::vector<ConfigEntry> parse_config_text(std::string_view text);

// `key=value` as given to --set.
ConfigEntry parse_override(std::string_view text);

// Value converters; ConfigError names the key on failure.
std::size_t config_size(std::string_view key, std::string_view value);
std::uint64_t config_u64(std::string_view key, std::string_view value);
double config_real(std::string_view key, std::string_view value);
bool config_bool(std::string_view key, std::string_view value);

}  // namespace kite
