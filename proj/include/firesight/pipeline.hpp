#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "firesight/config.hpp"
#include "firesight/stream_server.hpp"

namespace firesight {

/// Depth-1 hand-off between two stages. push() never blocks: a newer item
/// replaces an unconsumed one. pop() blocks until an item arrives or the
/// buffer is closed and empty.
template <typename T>
class HandoffBuffer {
public:
    /// Returns true when an unconsumed item was displaced.
    bool push(T item) {
        bool dropped;
        {
            std::lock_guard lock(mutex_);
            dropped = item_.has_value();
            item_ = std::move(item);
        }
        cv_.notify_one();
        return dropped;
    }

    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return item_.has_value() || closed_; });
        std::optional<T> out = std::move(item_);
        item_.reset();
        return out;
    }

    /// Consumers drain what is left, then pop() returns nullopt.
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<T> item_;
    bool closed_ = false;
};

/// One processed publish as seen by the pipeline's own clock.
struct PublishSample {
    std::uint32_t frame_id = 0;
    std::uint64_t seq = 0;  // processed sequence number in the slot
    std::chrono::steady_clock::time_point captured;
    std::chrono::steady_clock::time_point published;
};

class Pipeline {
public:
    /// Validates the config and opens every source, backend and store.
    /// Throws InvalidConfig / PathNotFound / Malformed* / StorageFailure.
    explicit Pipeline(PipelineConfig config);
    ~Pipeline();

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    /// Binds the server (BindFailure) and starts every stage thread.
    void start();
    /// True once every source has ended and its stages drained.
    bool wait_finished(std::chrono::milliseconds timeout);
    bool finished() const;
    /// Stops sources, drains stages, stops the server. Idempotent.
    void stop();

    int port() const;
    std::string bound_address() const;
    const PipelineConfig& config() const noexcept { return config_; }
    std::shared_ptr<StreamHub> hub() const noexcept { return hub_; }

    /// Most recent publishes for a source (bounded history).
    std::vector<PublishSample> publish_history(const std::string& source_id) const;
    /// Steady-clock times of captures for a source (bounded history).
    std::vector<std::chrono::steady_clock::time_point> capture_history(const std::string& source_id) const;

private:
    struct Chain;
    void on_chain_finished();

    PipelineConfig config_;
    std::shared_ptr<StreamHub> hub_;
    std::unique_ptr<StreamServer> server_;
    std::vector<std::unique_ptr<Chain>> chains_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t finished_chains_ = 0;
    bool started_ = false;
    bool stopped_ = false;
};

/// Resident set size of this process, from /proc/self/status (0 if unknown).
std::size_t resident_memory_bytes();

}  // namespace firesight
