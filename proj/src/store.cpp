#include "firesight/store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>

namespace fs = std::filesystem;

namespace firesight {

namespace {

constexpr const char* kIndexName = "index.json";

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(Errc::StorageFailure, "cannot open " + path.string() + " for writing");
    os << text;
    os.flush();
    if (!os) fail(Errc::StorageFailure, "write failed: " + path.string());
}

nlohmann::json detections_json(const std::vector<Detection>& dets) {
    auto arr = nlohmann::json::array();
    for (const auto& d : dets) {
        auto j = detection_to_json(d);
        j.erase("mask_rle");
        arr.push_back(std::move(j));
    }
    return arr;
}

std::optional<std::pair<std::uint64_t, std::uint32_t>> parse_entry_id(const std::string& id) {
    const auto dash = id.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= id.size()) return std::nullopt;
    std::uint64_t epoch = 0;
    std::uint32_t index = 0;
    const char* b = id.data();
    const char* e = id.data() + id.size();
    auto r1 = std::from_chars(b, b + dash, epoch);
    if (r1.ec != std::errc{} || r1.ptr != b + dash) return std::nullopt;
    auto r2 = std::from_chars(b + dash + 1, e, index);
    if (r2.ec != std::errc{} || r2.ptr != e) return std::nullopt;
    return std::make_pair(epoch, index);
}

std::string make_entry_id(std::uint64_t epoch, std::uint32_t index) {
    return std::to_string(epoch) + "-" + std::to_string(index);
}

}  // namespace

nlohmann::json summary_to_json(const EntrySummary& s) {
    return {
        {"entry_id", s.entry_id},
        {"source_id", s.source_id},
        {"frame_id", s.frame_id},
        {"timestamp_us", s.timestamp_us},
        {"epoch", s.epoch},
        {"priority", s.priority},
        {"description", s.description},
        {"detections", detections_json(s.detections)},
    };
}

RingStore::RingStore(std::string root, std::size_t capacity) : root_(std::move(root)), capacity_(capacity) {
    if (capacity_ == 0) fail(Errc::InvalidConfig, "store capacity must be >= 1");
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_)) {
        fail(Errc::StorageFailure, "cannot create store root " + root_ + ": " + ec.message());
    }
    load_index();
    remove_orphans();
}

std::string RingStore::epoch_dir(std::uint64_t epoch) const {
    return (fs::path(root_) / ("epoch-" + std::to_string(epoch))).string();
}

std::string RingStore::entry_stem(std::uint32_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06u", index);
    return buf;
}

void RingStore::load_index() {
    const fs::path path = fs::path(root_) / kIndexName;
    std::ifstream is(path);
    if (!is) return;
    const auto doc = nlohmann::json::parse(is, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return;  // treated as empty; files become orphans
    epoch_ = doc.value("epoch", std::uint64_t{0});
    for (const auto& j : doc.value("entries", nlohmann::json::array())) {
        EntrySummary s;
        s.entry_id = j.value("entry_id", std::string{});
        s.source_id = j.value("source_id", std::string{});
        s.frame_id = j.value("frame_id", std::uint32_t{0});
        s.timestamp_us = j.value("timestamp_us", std::uint64_t{0});
        s.epoch = j.value("epoch", epoch_);
        s.priority = j.value("priority", 0.0);
        s.description = j.value("description", std::string{});
        const auto parsed = parse_entry_id(s.entry_id);
        if (!parsed || parsed->first != epoch_) continue;
        s.index = parsed->second;
        for (const auto& d : j.value("detections", nlohmann::json::array())) {
            try {
                s.detections.push_back(detection_from_json(d));
            } catch (const Error&) {
            }
        }
        entries_.push_back(std::move(s));
    }
    if (entries_.size() > capacity_) entries_.resize(capacity_);
}

void RingStore::write_index_locked() const {
    auto entries = nlohmann::json::array();
    for (const auto& s : entries_) entries.push_back(summary_to_json(s));
    const nlohmann::json doc = {{"epoch", epoch_}, {"capacity", capacity_}, {"entries", std::move(entries)}};
    const fs::path final_path = fs::path(root_) / kIndexName;
    const fs::path tmp = fs::path(root_) / (std::string(kIndexName) + ".tmp");
    write_text_file(tmp, doc.dump());
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(Errc::StorageFailure, "cannot publish index: " + ec.message());
    }
}

std::set<std::string> RingStore::referenced_files() const {
    std::shared_lock lock(mutex_);
    std::set<std::string> refs{kIndexName};
    const std::string dir = "epoch-" + std::to_string(epoch_);
    for (const auto& s : entries_) {
        const auto stem = entry_stem(s.index);
        refs.insert(dir + "/" + stem + "_raw.fgf");
        refs.insert(dir + "/" + stem + "_proc.fgf");
        refs.insert(dir + "/" + stem + "_meta.json");
    }
    return refs;
}

void RingStore::remove_orphans() const {
    const auto refs = referenced_files();
    const std::string live_dir = "epoch-" + std::to_string(epoch_);
    std::error_code ec;
    std::vector<fs::path> doomed;
    for (auto it = fs::recursive_directory_iterator(root_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        const auto rel = fs::relative(it->path(), root_, ec).generic_string();
        if (it->is_directory()) {
            if (rel != live_dir) {
                doomed.push_back(it->path());
                it.disable_recursion_pending();
            }
            continue;
        }
        if (!refs.count(rel)) doomed.push_back(it->path());
    }
    for (const auto& p : doomed) fs::remove_all(p, ec);
}

void RingStore::inject_faults(double rate, std::uint64_t seed) {
    std::unique_lock lock(mutex_);
    fault_rate_ = rate;
    fault_rng_.seed(seed);
}

std::string RingStore::put(const Frame& raw, const Frame& processed, const EntryRecord& record) {
    validate_frame(raw);
    validate_frame(processed);

    if (fault_rate_ > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(fault_rng_) < fault_rate_) {
        fail(Errc::StorageFailure, "injected storage fault on frame " + std::to_string(raw.frame_id));
    }

    std::uint64_t epoch;
    std::uint32_t index;
    {
        std::unique_lock lock(mutex_);
        if (entries_.size() >= capacity_) {
            std::error_code ec;
            fs::remove_all(epoch_dir(epoch_), ec);
            entries_.clear();
            ++epoch_;
            write_index_locked();
            if (ec) fail(Errc::StorageFailure, "epoch reset could not delete old entries: " + ec.message());
        }
        epoch = epoch_;
        index = static_cast<std::uint32_t>(entries_.size());
    }

    const fs::path dir = epoch_dir(epoch);
    const auto stem = entry_stem(index);
    const fs::path raw_path = dir / (stem + "_raw.fgf");
    const fs::path proc_path = dir / (stem + "_proc.fgf");
    const fs::path meta_path = dir / (stem + "_meta.json");
    const std::string id = make_entry_id(epoch, index);

    EntrySummary summary;
    summary.entry_id = id;
    summary.source_id = raw.source_id;
    summary.frame_id = raw.frame_id;
    summary.timestamp_us = raw.timestamp_us;
    summary.epoch = epoch;
    summary.index = index;
    summary.priority = record.priority;
    summary.description = record.description;
    summary.detections = record.detections;

    const auto cleanup = [&] {
        std::error_code ec;
        for (const auto& p : {raw_path, proc_path, meta_path}) {
            if (!fs::is_directory(p, ec)) fs::remove(p, ec);
        }
    };

    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir)) {
            fail(Errc::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
        }
        write_fgf_file(raw_path.string(), raw);
        write_fgf_file(proc_path.string(), processed);
        auto tracks = nlohmann::json::array();
        for (const auto& t : record.tracks) tracks.push_back(track_to_json(t));
        nlohmann::json meta = {
            {"entry_id", id},
            {"frame_id", raw.frame_id},
            {"source_id", raw.source_id},
            {"timestamp_us", raw.timestamp_us},
            {"tracks", std::move(tracks)},
            {"detections", detections_json(record.detections)},
            {"priority", record.priority},
            {"description", record.description},
        };
        write_text_file(meta_path, meta.dump());

        std::unique_lock lock(mutex_);
        if (epoch_ != epoch || entries_.size() != index) {
            fail(Errc::StorageFailure, "concurrent writer detected");
        }
        entries_.push_back(summary);
        try {
            write_index_locked();
        } catch (...) {
            entries_.pop_back();
            throw;
        }
    } catch (const Error& e) {
        cleanup();
        if (e.code() == Errc::StorageFailure) throw;
        fail(Errc::StorageFailure, e.what());
    } catch (const std::exception& e) {
        cleanup();
        fail(Errc::StorageFailure, e.what());
    }
    return id;
}

std::vector<EntrySummary> RingStore::query(const std::set<ClassLabel>& classes, double min_confidence) const {
    std::shared_lock lock(mutex_);
    std::vector<EntrySummary> out;
    for (const auto& s : entries_) {
        bool match = classes.empty() && min_confidence <= 0.0;
        for (const auto& d : s.detections) {
            if (match) break;
            match = (classes.empty() || classes.count(d.label)) && d.confidence >= min_confidence;
        }
        if (match) out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(), [](const EntrySummary& a, const EntrySummary& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.index > b.index;
    });
    return out;
}

std::optional<EntrySummary> RingStore::summary(const std::string& entry_id) const {
    const auto parsed = parse_entry_id(entry_id);
    if (!parsed) return std::nullopt;
    std::shared_lock lock(mutex_);
    if (parsed->first != epoch_ || parsed->second >= entries_.size()) return std::nullopt;
    return entries_[parsed->second];
}

StoredEntry RingStore::get(const std::string& entry_id) const {
    const auto parsed = parse_entry_id(entry_id);
    if (!parsed) fail(Errc::NotFound, "malformed entry id '" + entry_id + "'");
    std::shared_lock lock(mutex_);
    if (parsed->first != epoch_ || parsed->second >= entries_.size()) {
        fail(Errc::NotFound, "no entry '" + entry_id + "' in epoch " + std::to_string(epoch_));
    }
    const fs::path dir = epoch_dir(epoch_);
    const auto stem = entry_stem(parsed->second);
    try {
        StoredEntry e;
        e.raw = read_fgf_file((dir / (stem + "_raw.fgf")).string(), entries_[parsed->second].source_id);
        e.processed = read_fgf_file((dir / (stem + "_proc.fgf")).string(), entries_[parsed->second].source_id);
        std::ifstream is(dir / (stem + "_meta.json"));
        e.metadata = nlohmann::json::parse(is, nullptr, false);
        if (e.metadata.is_discarded()) fail(Errc::NotFound, "entry metadata unreadable");
        return e;
    } catch (const Error& e) {
        fail(Errc::NotFound, "entry '" + entry_id + "' unreadable: " + e.what());
    }
}

std::size_t RingStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::uint64_t RingStore::epoch() const {
    std::shared_lock lock(mutex_);
    return epoch_;
}

}  // namespace firesight
