#include "lda/manifest.hpp"

#include <cstdio>
#include <ctime>

#include "lda/errors.hpp"
#include "lda/fileio.hpp"

namespace lda {

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(
      std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void RunManifest::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find('=') != std::string::npos) {
    throw ValueError("manifest key \"" + key + "\" must be nonempty and '='-free");
  }
  if (value.find('\n') != std::string::npos) {
    throw ValueError("manifest value for \"" + key + "\" contains a newline");
  }
  for (auto& entry : entries_) {
    if (entry.first == key) {
      entry.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void RunManifest::set(const std::string& key, uint64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, int64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(key, std::string(buf));
}

std::optional<std::string> RunManifest::get(const std::string& key) const {
  for (const auto& entry : entries_) {
    if (entry.first == key) return entry.second;
  }
  return std::nullopt;
}

std::string RunManifest::serialize() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

void RunManifest::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

RunManifest RunManifest::parse(const std::string& text) {
  RunManifest manifest;
  size_t start = 0;
  size_t lineno = 0;
  while (start < text.size()) {
    ++lineno;
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end + 1;
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected key=value, got \"" + line + "\"");
    }
    manifest.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return manifest;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  return parse(read_file_text(path));
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lda
