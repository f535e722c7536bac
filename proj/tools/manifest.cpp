#include "manifest.hpp"

#include <ctime>

#include <nlohmann/json.hpp>

#include "kite/common/text.hpp"

#ifndef KITE_VERSION
#define KITE_VERSION "unknown"
#endif

namespace kite::cli {

RunManifest::RunManifest(std::string command, std::uint64_t seed, std::size_t threads)
    : command_(std::move(command)),
      fingerprint_(0),
      seed_(seed),
      threads_(threads),
      start_(std::chrono::steady_clock::now()),
      started_at_(std::chrono::system_clock::now()) {}

void RunManifest::add_input(std::string_view role, const std::filesystem::path& path) {
  inputs_.push_back({std::string(role), path.string(), hex64(fnv1a64(read_file(path)))});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }

void RunManifest::write(const std::filesystem::path& out_dir) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["version"] = KITE_VERSION;
  j["config_fingerprint"] = hex64(fingerprint_);
  j["seed"] = seed_;
  j["threads"] = threads_;
  auto& in = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& i : inputs_) in.push_back({{"role", i.role}, {"path", i.path}, {"fnv1a64", i.checksum}});
  j["outputs"] = outputs_;
  const std::time_t t = std::chrono::system_clock::to_time_t(started_at_);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  j["started_at"] = stamp;
  j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write_file_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
}

void emit(RunManifest& manifest, const std::filesystem::path& dir, std::string_view name, std::string_view contents) {
  const auto path = dir / std::string(name);
  write_file_atomic(path, contents);
  manifest.add_output(path);
}

}  // namespace kite::cli
