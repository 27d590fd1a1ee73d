#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/frame.hpp"
#include "firesight/perception.hpp"
#include "firesight/tracking.hpp"

namespace firesight {

inline constexpr std::size_t kDefaultStoreCapacity = 100;

/// Everything persisted alongside the two frames of one entry.
struct EntryRecord {
    std::vector<Track> tracks;
    std::vector<Detection> detections;
    double priority = 0.0;
    std::string description;
};

struct EntrySummary {
    std::string entry_id;
    std::string source_id;
    std::uint32_t frame_id = 0;
    std::uint64_t timestamp_us = 0;
    std::uint64_t epoch = 0;
    std::uint32_t index = 0;
    double priority = 0.0;
    std::string description;
    std::vector<Detection> detections;
};

nlohmann::json summary_to_json(const EntrySummary& s);

struct StoredEntry {
    Frame raw;
    Frame processed;
    nlohmann::json metadata;
};

/// Bounded on-disk frame store. When a put finds the store full, every entry
/// is deleted, the epoch advances, and the new frame becomes entry 0.
///
/// Layout: root/index.json plus root/epoch-<n>/<entry>_{raw.fgf,proc.fgf,meta.json}.
/// The index is the publication point: entry files are written first, and
/// anything under root not named by the index is removed at open.
///
/// One writer, any number of concurrent readers.
class RingStore {
public:
    explicit RingStore(std::string root, std::size_t capacity = kDefaultStoreCapacity);

    RingStore(const RingStore&) = delete;
    RingStore& operator=(const RingStore&) = delete;

    /// Returns the new entry id ("<epoch>-<index>"). Throws StorageFailure,
    /// leaving no partial entry files behind.
    std::string put(const Frame& raw, const Frame& processed, const EntryRecord& record);

    /// Current-epoch entries holding at least one detection whose label is in
    /// `classes` and whose confidence is >= min_confidence. An empty class set
    /// drops the label constraint; with min_confidence <= 0 it matches every
    /// entry. Ordered by descending priority, then newest first.
    std::vector<EntrySummary> query(const std::set<ClassLabel>& classes, double min_confidence) const;

    /// Throws NotFound for unknown, malformed, or reset-erased ids.
    StoredEntry get(const std::string& entry_id) const;
    std::optional<EntrySummary> summary(const std::string& entry_id) const;

    std::size_t size() const;
    std::uint64_t epoch() const;
    std::size_t capacity() const noexcept { return capacity_; }
    const std::string& root() const noexcept { return root_; }

    /// Paths (relative to root) the index references, including index.json.
    std::set<std::string> referenced_files() const;

    /// Makes each subsequent put fail with the given probability.
    void inject_faults(double rate, std::uint64_t seed);

private:
    void load_index();
    void write_index_locked() const;
    void remove_orphans() const;
    std::string epoch_dir(std::uint64_t epoch) const;
    static std::string entry_stem(std::uint32_t index);

    std::string root_;
    std::size_t capacity_;
    mutable std::shared_mutex mutex_;
    std::uint64_t epoch_ = 0;
    std::vector<EntrySummary> entries_;  // insertion order

    double fault_rate_ = 0.0;
    std::mt19937_64 fault_rng_;
};

}  // namespace firesight
