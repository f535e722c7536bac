#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kite::cli {

// Record of one run, written last so a present manifest means the outputs
// are complete.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed, std::size_t threads);

  void set_fingerprint(std::uint64_t fingerprint) { fingerprint_ = fingerprint; }
  // Checksums the file now, before anything else touches it.
  void add_input(std::string_view role, const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void write(const std::filesystem::path& out_dir) const;

 private:
  struct Input {
    std::string role;
    std::string path;
    std::string checksum;
  };
  std::string command_;
  std::uint64_t fingerprint_;
  std::uint64_t seed_;
  std::size_t threads_;
  std::vector<Input> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::system_clock::time_point started_at_;
};

// Writes `contents` under `dir` atomically and lists it in the manifest.
void emit(RunManifest& manifest, const std::filesystem::path& dir, std::string_view name, std::string_view contents);

}  // namespace kite::cli
