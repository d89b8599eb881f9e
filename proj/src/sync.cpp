#include "lda/sync.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "lda/bytes.hpp"
#include "lda/fileio.hpp"

namespace lda {

namespace fs = std::filesystem;

namespace {

constexpr uint32_t kDeltaMagic = 'L' | ('D' << 8) | ('A' << 16) | ('D' << 24);
constexpr uint32_t kDeltaVersion = 1;

// Strict relative-magnitude test: |delta| / max(count, 1) > threshold.
bool clears_threshold(int64_t delta, int64_t count, double threshold) {
  const double base = static_cast<double>(count < 1 ? 1 : count);
  return std::abs(static_cast<double>(delta)) / base > threshold;
}

// Collects directory entries, throwing IoError on scan failures.
template <typename Fn>
void for_each_dir_entry(const fs::path& dir, Fn&& fn) {
  std::error_code ec;
  auto it = fs::directory_iterator(dir, ec);
  if (ec) throw IoError("cannot scan " + dir.string() + ": " + ec.message());
  const fs::directory_iterator end;
  while (it != end) {
    fn(*it);
    it.increment(ec);
    if (ec) throw IoError("cannot scan " + dir.string() + ": " + ec.message());
  }
}

// "cursor_<worker>.txt"
std::optional<uint32_t> parse_heartbeat_name(const std::string& name) {
  constexpr const char* kPrefix = "cursor_";
  constexpr const char* kSuffix = ".txt";
  if (name.rfind(kPrefix, 0) != 0) return std::nullopt;
  if (name.size() <= 7 + 4 || name.substr(name.size() - 4) != kSuffix) {
    return std::nullopt;
  }
  const std::string digits = name.substr(7, name.size() - 11);
  if (digits.empty() ||
      digits.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  errno = 0;
  char* endp = nullptr;
  const unsigned long long v = std::strtoull(digits.c_str(), &endp, 10);
  if (errno != 0 || *endp != '\0' ||
      v > std::numeric_limits<uint32_t>::max()) {
    return std::nullopt;
  }
  return static_cast<uint32_t>(v);
}

}  // namespace

SyncConfig::SyncConfig(fs::path dir, uint32_t worker, uint32_t workers,
                       double thresh)
    : sync_dir(std::move(dir)),
      worker_id(worker),
      num_workers(workers),
      threshold(thresh),
      peer_cursors(workers, -1),
      suspected_holes(workers, -1) {
  validate();
}

void SyncConfig::validate() const {
  if (num_workers < 1) throw ValueError("sync: need at least one worker");
  if (worker_id >= num_workers) {
    throw ValueError("sync: worker id " + std::to_string(worker_id) +
                     " outside " + std::to_string(num_workers) + " workers");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValueError("sync: threshold must lie in [0, 1]");
  }
  if (peer_cursors.size() != num_workers) {
    throw ValueError("sync: cursor vector does not match worker count");
  }
  if (sync_dir.empty()) throw ValueError("sync: directory not set");
}

FilterSplit filter_deltas(const DeltaTable& delta, const GlobalCounts& counts,
                          double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValueError("sync: threshold must lie in [0, 1]");
  }
  if (delta.num_topics() != counts.num_topics() ||
      delta.vocab_size() != counts.vocab_size()) {
    throw ValueError("sync: delta table does not match count tables");
  }
  FilterSplit split;
  for (const DeltaEntry& e : delta.entries()) {
    if (clears_threshold(e.delta, counts.topic_term(e.topic, e.term),
                         threshold)) {
      split.publish.push_back(e);
    } else {
      split.residual.push_back(e);
    }
  }
  return split;
}

std::vector<DeltaEntry> drain_publishable(DeltaTable& delta,
                                          const GlobalCounts& counts,
                                          double threshold) {
  auto split = filter_deltas(delta, counts, threshold);
  for (const DeltaEntry& e : split.publish) {
    delta.clear_entry(e.topic, e.term);
  }
  return std::move(split.publish);
}

std::vector<uint8_t> encode_delta_file(std::span<const DeltaEntry> entries,
                                       uint32_t worker_id, uint32_t iteration) {
  std::vector<uint8_t> bytes;
  bytes.reserve(24 + entries.size() * 12);
  wire::put_u32(bytes, kDeltaMagic);
  wire::put_u32(bytes, kDeltaVersion);
  wire::put_u32(bytes, worker_id);
  wire::put_u32(bytes, iteration);
  wire::put_u64(bytes, entries.size());
  const DeltaEntry* prev = nullptr;
  for (const DeltaEntry& e : entries) {
    if (e.delta == 0) {
      throw ValueError("zero delta for topic " + std::to_string(e.topic) +
                       ", term " + std::to_string(e.term));
    }
    if (e.delta > std::numeric_limits<int32_t>::max() ||
        e.delta < std::numeric_limits<int32_t>::min()) {
      throw CapacityError("delta " + std::to_string(e.delta) +
                          " does not fit the 32-bit wire format");
    }
    if (prev != nullptr && !(prev->topic < e.topic ||
                             (prev->topic == e.topic && prev->term < e.term))) {
      throw ValueError("delta entries must be strictly sorted by (topic, term)");
    }
    wire::put_u32(bytes, e.topic);
    wire::put_u32(bytes, e.term);
    wire::put_i32(bytes, static_cast<int32_t>(e.delta));
    prev = &e;
  }
  return bytes;
}

DecodedDelta decode_delta_file(std::span<const uint8_t> bytes) {
  wire::ByteReader reader(bytes.data(), bytes.size(), "delta file");
  if (reader.u32() != kDeltaMagic) {
    throw FormatError("delta file magic mismatch");
  }
  const uint32_t version = reader.u32();
  if (version != kDeltaVersion) {
    throw FormatError("unsupported delta file version " +
                      std::to_string(version));
  }
  DecodedDelta decoded;
  decoded.worker_id = reader.u32();
  decoded.iteration = reader.u32();
  const uint64_t count = reader.u64();
  if (count > reader.remaining() / 12) {
    throw TruncationError("delta file declares " + std::to_string(count) +
                          " entries, payload holds " +
                          std::to_string(reader.remaining()) + " byte(s)");
  }
  decoded.entries.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    DeltaEntry e;
    e.topic = reader.u32();
    e.term = reader.u32();
    e.delta = reader.i32();
    if (e.delta == 0) {
      throw CorruptionError("zero delta at entry " + std::to_string(i));
    }
    if (i > 0) {
      const DeltaEntry& prev = decoded.entries.back();
      if (!(prev.topic < e.topic ||
            (prev.topic == e.topic && prev.term < e.term))) {
        throw CorruptionError("unsorted delta entries at entry " +
                              std::to_string(i));
      }
    }
    decoded.entries.push_back(e);
  }
  if (!reader.done()) {
    throw CorruptionError("delta file has " +
                          std::to_string(reader.remaining()) +
                          " trailing byte(s)");
  }
  return decoded;
}

std::string delta_file_name(uint32_t worker_id, uint32_t iteration) {
  return "delta_" + std::to_string(worker_id) + "_" +
         std::to_string(iteration) + ".bin";
}

std::optional<std::pair<uint32_t, uint32_t>> parse_delta_file_name(
    const std::string& name) {
  if (name.rfind("delta_", 0) != 0) return std::nullopt;
  if (name.size() <= 6 + 4 || name.substr(name.size() - 4) != ".bin") {
    return std::nullopt;
  }
  const std::string body = name.substr(6, name.size() - 10);
  const auto sep = body.find('_');
  if (sep == std::string::npos) return std::nullopt;
  const std::string w = body.substr(0, sep);
  const std::string i = body.substr(sep + 1);
  auto parse_u32 = [](const std::string& digits) -> std::optional<uint32_t> {
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
      return std::nullopt;
    }
    errno = 0;
    char* endp = nullptr;
    const unsigned long long v = std::strtoull(digits.c_str(), &endp, 10);
    if (errno != 0 || *endp != '\0' ||
        v > std::numeric_limits<uint32_t>::max()) {
      return std::nullopt;
    }
    return static_cast<uint32_t>(v);
  };
  const auto worker = parse_u32(w);
  const auto iter = parse_u32(i);
  if (!worker || !iter) return std::nullopt;
  return std::make_pair(*worker, *iter);
}

fs::path publish_deltas(const SyncConfig& config,
                        std::span<const DeltaEntry> entries,
                        uint32_t iteration) {
  config.validate();
  const auto bytes = encode_delta_file(entries, config.worker_id, iteration);
  const fs::path path =
      config.sync_dir / delta_file_name(config.worker_id, iteration);
  write_file_atomic(path, bytes);
  return path;
}

MergeStats scan_and_merge(SyncConfig& config, CountTables& counts) {
  config.validate();
  if (config.suspected_holes.size() != config.num_workers) {
    config.suspected_holes.assign(config.num_workers, -1);
  }
  const uint32_t num_topics = counts.num_topics();
  const uint32_t vocab_size = counts.vocab_size();

  struct Item {
    uint32_t worker;
    uint32_t iter;
    fs::path path;
    bool operator<(const Item& o) const {
      return worker != o.worker ? worker < o.worker : iter < o.iter;
    }
  };
  std::vector<Item> items;
  for_each_dir_entry(config.sync_dir, [&](const fs::directory_entry& entry) {
    const auto parsed = parse_delta_file_name(entry.path().filename().string());
    if (!parsed) return;
    const auto [worker, iter] = *parsed;
    if (worker == config.worker_id || worker >= config.num_workers) return;
    if (static_cast<int64_t>(iter) <= config.peer_cursors[worker]) return;
    items.push_back({worker, iter, entry.path()});
  });
  std::sort(items.begin(), items.end());

  MergeStats stats;
  constexpr uint32_t kNone = std::numeric_limits<uint32_t>::max();
  uint32_t blocked_worker = kNone;
  for (const Item& item : items) {
    if (item.worker == blocked_worker) continue;
    int64_t& cursor = config.peer_cursors[item.worker];

    // A directory snapshot can catch file i+1 while missing file i that was
    // renamed moments earlier, so only the next contiguous iteration is
    // consumed; a gap parks this peer until the next call. But this very
    // file proves `expected` was once published (its writer renames in
    // order), so if the same hole is still there on the next scan — a scan
    // that began after this one ended, hence after `expected` was renamed —
    // the file has been removed (reclaimed by gc) and can never appear
    // again: skip the hole instead of stalling on it forever.
    const int64_t expected = cursor < 0 ? 0 : cursor + 1;
    int64_t& suspected = config.suspected_holes[item.worker];
    if (static_cast<int64_t>(item.iter) != expected) {
      if (suspected == expected) {
        std::fprintf(stderr,
                     "lda: %lld delta file(s) from worker %u vanished before "
                     "merging; resuming at iteration %u\n",
                     static_cast<long long>(item.iter - expected), item.worker,
                     item.iter);
        stats.files_skipped_missing += static_cast<int64_t>(item.iter) -
                                       expected;
        cursor = static_cast<int64_t>(item.iter) - 1;
        suspected = -1;
      } else {
        suspected = expected;
        blocked_worker = item.worker;
        continue;
      }
    } else {
      suspected = -1;
    }

    std::vector<uint8_t> bytes;
    try {
      bytes = read_file_bytes(item.path);
    } catch (const IoError&) {
      // Transient read failure: leave the cursor alone and retry next call.
      blocked_worker = item.worker;
      continue;
    }

    try {
      const DecodedDelta decoded = decode_delta_file(bytes);
      if (decoded.worker_id != item.worker || decoded.iteration != item.iter) {
        throw CorruptionError("delta header disagrees with file name");
      }
      for (const DeltaEntry& e : decoded.entries) {
        if (e.topic >= num_topics || e.term >= vocab_size) {
          throw CorruptionError("delta entry (" + std::to_string(e.topic) +
                                ", " + std::to_string(e.term) +
                                ") outside the count tables");
        }
      }
      // Validation passed; application cannot fail halfway.
      for (const DeltaEntry& e : decoded.entries) {
        counts.global().apply_delta(e.topic, e.term, e.delta);
        if (counts.global().topic_term(e.topic, e.term) < 0 ||
            counts.global().topic_total(e.topic) < 0) {
          counts.note_negative_count();
        }
        counts.add_merged_delta(e.delta);
      }
      stats.entries_applied += static_cast<int64_t>(decoded.entries.size());
      stats.bytes_read += static_cast<int64_t>(bytes.size());
      ++stats.files_consumed;
    } catch (const Error& err) {
      // Structurally bad file: report, skip it for good, keep going. One bad
      // producer must not wedge the cohort.
      std::fprintf(stderr, "lda: skipping corrupt delta file %s: %s\n",
                   item.path.string().c_str(), err.what());
      ++stats.files_skipped_corrupt;
    }
    cursor = item.iter;
  }
  return stats;
}

void write_heartbeat(const SyncConfig& config, int64_t iteration) {
  config.validate();
  const fs::path path =
      config.sync_dir / ("cursor_" + std::to_string(config.worker_id) + ".txt");
  write_file_atomic(path, std::to_string(iteration) + "\n");
}

std::map<uint32_t, int64_t> read_heartbeats(const fs::path& dir) {
  std::map<uint32_t, int64_t> beats;
  for_each_dir_entry(dir, [&](const fs::directory_entry& entry) {
    const auto worker = parse_heartbeat_name(entry.path().filename().string());
    if (!worker) return;
    std::string text;
    try {
      text = read_file_text(entry.path());
    } catch (const IoError&) {
      return;  // unreadable heartbeat counts as absent
    }
    errno = 0;
    char* endp = nullptr;
    const long long v = std::strtoll(text.c_str(), &endp, 10);
    while (*endp == '\n' || *endp == '\r' || *endp == ' ' || *endp == '\t') {
      ++endp;
    }
    if (errno != 0 || endp == text.c_str() || *endp != '\0') {
      std::fprintf(stderr, "lda: ignoring malformed heartbeat %s\n",
                   entry.path().string().c_str());
      return;
    }
    beats[*worker] = v;
  });
  return beats;
}

int64_t gc_sync_dir(const fs::path& dir) {
  const auto heartbeats = read_heartbeats(dir);

  struct DeltaFile {
    uint32_t worker;
    uint32_t iter;
    fs::path path;
  };
  std::vector<DeltaFile> files;
  for_each_dir_entry(dir, [&](const fs::directory_entry& entry) {
    const auto parsed = parse_delta_file_name(entry.path().filename().string());
    if (parsed) files.push_back({parsed->first, parsed->second, entry.path()});
  });
  if (files.empty()) return 0;

  // Without a heartbeat a publisher's consumption cannot be bounded, so the
  // safe move is to keep everything.
  for (const DeltaFile& f : files) {
    if (!heartbeats.contains(f.worker)) return 0;
  }

  int64_t min_cursor = std::numeric_limits<int64_t>::max();
  for (const auto& [worker, cursor] : heartbeats) {
    min_cursor = std::min(min_cursor, cursor);
  }

  int64_t removed = 0;
  for (const DeltaFile& f : files) {
    if (static_cast<int64_t>(f.iter) < min_cursor) {
      std::error_code ec;
      if (fs::remove(f.path, ec) && !ec) ++removed;
    }
  }
  return removed;
}

}  // namespace lda
