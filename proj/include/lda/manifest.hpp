#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lda {

// FNV-1a, 64-bit. Used to fingerprint corpus bytes in run manifests.
uint64_t fnv1a64(std::span<const uint8_t> bytes);
uint64_t fnv1a64(const std::string& text);

// The reproducibility record written once per training run: flat key=value
// lines, insertion-ordered, one per line. Values must not contain newlines;
// keys must be nonempty and '='-free.
class RunManifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, uint64_t value);
  void set(const std::string& key, int64_t value);
  void set(const std::string& key, double value);  // round-trip formatting

  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;  // atomic write

  static RunManifest parse(const std::string& text);  // ParseError on junk
  static RunManifest load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// "2026-01-31T08:45:12Z" for the current wall clock.
std::string utc_timestamp();

}  // namespace lda
