#pragma once

#include <filesystem>
#include <string>

#ifndef KITE_FIXTURE_DIR
#error "KITE_FIXTURE_DIR must be defined by the build"
#endif

namespace kite::test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(KITE_FIXTURE_DIR) / name;
}

}  // namespace kite::test
