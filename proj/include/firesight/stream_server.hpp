#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/depth_geom.hpp"
#include "firesight/frame.hpp"
#include "firesight/store.hpp"
#include "firesight/tracking.hpp"

namespace firesight {

using JpegBytes = std::shared_ptr<const std::vector<std::uint8_t>>;

/// Static description of a source as reported by /api/sources.
struct SourceInfo {
    std::string source_id;
    std::string kind;  // "synthetic" | "replay"
    double fps = 30.0;
    std::uint32_t width = 0, height = 0;
    PixelFormat format = PixelFormat::Gray16;
    CameraIntrinsics intrinsics;
    std::int32_t depth_near_mm = 300;
    std::int32_t depth_far_mm = 5000;
};

/// Per-source pipeline counters, written by the stage threads.
struct SourceCounters {
    std::atomic<std::uint64_t> captured{0};
    std::atomic<std::uint64_t> processed{0};
    std::atomic<std::uint64_t> published{0};
    std::atomic<std::uint64_t> dropped{0};
    std::atomic<std::uint64_t> backend_failures{0};
    std::atomic<std::uint64_t> storage_failures{0};
    std::atomic<std::uint64_t> stored{0};
};

/// Processed-side payload of a slot update.
struct ProcessedView {
    std::uint32_t frame_id = 0;
    std::uint64_t timestamp_us = 0;
    JpegBytes jpeg;
    std::vector<Track> tracks;
    std::string description = "No objects detected.";
    double priority = 0.0;
};

/// Immutable snapshot held by a LatestSlot.
struct SlotState {
    std::uint64_t seq = 0;            // bumps on every publish
    std::uint64_t raw_seq = 0;        // == seq of the last raw update
    std::uint64_t processed_seq = 0;  // bumps only when a processed frame lands
    std::uint32_t raw_frame_id = 0;
    std::uint64_t raw_timestamp_us = 0;
    FramePtr raw_frame;  // original capture (GRAY16 / RGB8 / DEPTH16)
    JpegBytes raw_jpeg;
    std::optional<ProcessedView> processed;
};

/// Single-value hand-off from one producer to many readers. A publish
/// replaces whatever was there; readers only ever hold shared snapshots, so
/// the producer is never blocked by a slow consumer.
class LatestSlot {
public:
    struct Update {
        FramePtr raw_frame;
        JpegBytes raw_jpeg;
        std::optional<ProcessedView> processed;  // nullopt = raw-only update
    };

    /// Returns the new sequence number.
    std::uint64_t publish(Update update);

    std::shared_ptr<const SlotState> latest() const;

    enum class Watch { Raw, Processed, Any };
    /// Blocks until a snapshot newer than `seen` (by the watched counter)
    /// exists, or the timeout passes (returns nullptr).
    std::shared_ptr<const SlotState> wait_newer(std::uint64_t seen, Watch what,
                                                std::chrono::milliseconds timeout) const;

    void set_listener(std::function<void()> on_publish);

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::shared_ptr<const SlotState> state_ = std::make_shared<SlotState>();
    std::function<void()> on_publish_;
};

/// Registry of live sources shared by the pipeline (writer) and the server
/// (reader).
class StreamHub {
public:
    struct Channel {
        SourceInfo info;
        LatestSlot slot;
        SourceCounters counters;
        std::shared_ptr<RingStore> store;  // may be null
    };

    Channel& add_source(SourceInfo info, std::shared_ptr<RingStore> store = nullptr);

    Channel* find(const std::string& source_id);
    const Channel* find(const std::string& source_id) const;
    std::vector<std::string> source_ids() const;  // registration order

    /// Monotone counter of processed publishes across all sources.
    std::uint64_t version() const;
    /// Waits until version() > seen or timeout; returns the current version.
    std::uint64_t wait_version(std::uint64_t seen, std::chrono::milliseconds timeout) const;

private:
    void notify();

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::uint64_t version_ = 0;
    std::vector<std::unique_ptr<Channel>> channels_;
};

// JSON views served by the API.
nlohmann::json latest_json(const StreamHub::Channel& ch);
nlohmann::json latest_json(const SourceInfo& info, const SlotState& state);
nlohmann::json source_json(const StreamHub::Channel& ch);

/// RGB8 rendering of a raw capture for display (normalized thermal, depth
/// colormap, or the frame itself).
Frame display_frame(const Frame& raw, const SourceInfo& info);

struct ServerConfig {
    std::string bind_address = "0.0.0.0";
    int port = 8080;  // 0 = ephemeral
    int jpeg_quality = 85;
    std::size_t worker_threads = 32;
    std::string static_dir;  // optional console assets served under /console/
};

/// HTTP/1.1 front end: MJPEG streams, JSON API, SSE, and a landing page.
class StreamServer {
public:
    StreamServer(std::shared_ptr<StreamHub> hub, ServerConfig config);
    ~StreamServer();

    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    /// Binds the listening socket; returns the bound port. Throws BindFailure.
    int bind();
    /// Serves on a background thread until stop().
    void start();
    void stop();

    int port() const noexcept { return port_; }
    const ServerConfig& config() const noexcept { return config_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::shared_ptr<StreamHub> hub_;
    ServerConfig config_;
    int port_ = -1;
};

}  // namespace firesight
