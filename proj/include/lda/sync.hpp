#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lda/delta.hpp"
#include "lda/model.hpp"

// Asynchronous one-to-all exchange of topic-term count deltas over a shared
// directory.
//
// Each worker publishes one file per iteration, named delta_<worker>_<iter>.bin,
// holding the count changes whose relative magnitude cleared the staleness
// threshold; everything below threshold stays in the local delta table and
// keeps accumulating until it clears (or the run ends). Files appear
// atomically (temp + rename), so scanners never observe partial payloads, and
// no step here ever waits on another worker.

namespace lda {

// Per-worker view of one sync directory. `peer_cursors[w]` is the last
// iteration of worker w's files this worker has merged (-1 = none yet).
// `suspected_holes[w]` tracks an expected-but-absent file index observed
// while a later file from w was already visible; -1 = no suspicion.
struct SyncConfig {
  std::filesystem::path sync_dir;
  uint32_t worker_id = 0;
  uint32_t num_workers = 1;
  double threshold = 0.0;  // in [0, 1]
  std::vector<int64_t> peer_cursors;
  std::vector<int64_t> suspected_holes;

  SyncConfig() = default;
  SyncConfig(std::filesystem::path dir, uint32_t worker, uint32_t workers,
             double threshold);
  void validate() const;
};

// Splits a delta table against the current global counts: `publish` gets the
// entries with |delta| / max(n[k][v], 1) strictly above the threshold,
// `residual` the rest. Both sorted by (topic, term). At threshold 0 every
// nonzero entry publishes (|d|/max(n,1) > 0 always); at threshold 1 a delta
// publishes only when it exceeds the count it applies to.
struct FilterSplit {
  std::vector<DeltaEntry> publish;
  std::vector<DeltaEntry> residual;
};
FilterSplit filter_deltas(const DeltaTable& delta, const GlobalCounts& counts,
                          double threshold);

// The worker-loop variant: removes and returns the publishable entries,
// leaving residuals accumulating in the table.
std::vector<DeltaEntry> drain_publishable(DeltaTable& delta,
                                          const GlobalCounts& counts,
                                          double threshold);

// Delta file payload: magic "LDAD", version u32 = 1, worker u32, iteration
// u32, entry count u64, then per entry topic u32, term u32, delta i32 — all
// little-endian, entries sorted by (topic, term), no zero deltas. An empty
// publish is a valid 24-byte file (workers publish every iteration so peers
// can track progress).
std::vector<uint8_t> encode_delta_file(std::span<const DeltaEntry> entries,
                                       uint32_t worker_id, uint32_t iteration);

// On-disk size of a delta file with `entries` entries: 24-byte header plus
// 12 bytes per entry.
constexpr int64_t delta_file_bytes(size_t entries) {
  return 24 + 12 * static_cast<int64_t>(entries);
}

struct DecodedDelta {
  uint32_t worker_id = 0;
  uint32_t iteration = 0;
  std::vector<DeltaEntry> entries;
};
// Rejects bad magic/version (FormatError), short payloads (TruncationError),
// and unsorted/duplicate/zero entries or trailing bytes (CorruptionError).
DecodedDelta decode_delta_file(std::span<const uint8_t> bytes);

std::string delta_file_name(uint32_t worker_id, uint32_t iteration);
// Parses "delta_<worker>_<iter>.bin"; nullopt for anything else.
std::optional<std::pair<uint32_t, uint32_t>> parse_delta_file_name(
    const std::string& name);

// Encodes and atomically publishes one delta file into the sync directory.
// Returns the final path. Publishing iteration i twice replaces the file.
std::filesystem::path publish_deltas(const SyncConfig& config,
                                     std::span<const DeltaEntry> entries,
                                     uint32_t iteration);

struct MergeStats {
  int64_t files_consumed = 0;
  int64_t entries_applied = 0;
  int64_t bytes_read = 0;
  int64_t files_skipped_corrupt = 0;
  int64_t files_skipped_missing = 0;  // reclaimed before this worker merged
};

// Merges every not-yet-consumed peer delta file (per-peer cursor order) into
// the global counts. Unreadable files are retried on the next call; files
// that read but fail to decode are reported on stderr, skipped permanently,
// and isolate no one else. A file that stays absent across two consecutive
// scans while a later file from the same publisher is visible was provably
// published and then removed (publishers rename strictly in order), so the
// hole is reported, skipped, and merging resumes behind it instead of
// waiting forever. Never blocks on peers.
MergeStats scan_and_merge(SyncConfig& config, CountTables& counts);

// Heartbeat cursor_<worker>.txt: the iteration this worker has published
// through, one ASCII integer. Written atomically.
void write_heartbeat(const SyncConfig& config, int64_t iteration);
// All heartbeats present in the directory (worker id -> iteration).
std::map<uint32_t, int64_t> read_heartbeats(const std::filesystem::path& dir);

// Removes delta files with iteration < min heartbeat. If any worker with
// delta files on disk has no heartbeat, nothing is removed (its progress
// cannot be bounded). Heartbeats advertise published-through, not
// consumed-through, so a reader lagging far behind the slowest publisher can
// lose reclaimed files to a concurrent gc; scan_and_merge detects and skips
// such holes rather than stalling. Returns the number of files removed.
int64_t gc_sync_dir(const std::filesystem::path& dir);

}  // namespace lda
