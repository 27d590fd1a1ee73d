#include "firesight/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "firesight/jpeg.hpp"
#include "firesight/log.hpp"
#include "firesight/overlay.hpp"
#include "firesight/perception.hpp"
#include "firesight/scene.hpp"
#include "firesight/scene_script.hpp"

namespace firesight {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kHistoryCap = 1 << 16;

struct Captured {
    FramePtr raw;
    Clock::time_point at;
};

struct Analyzed {
    FramePtr raw;
    Frame display;
    Clock::time_point at;
    bool failed = false;
    std::vector<Detection> detections;
    std::vector<Track> tracks;
};

std::string source_kind_name(SourceKind k) { return k == SourceKind::Replay ? "replay" : "synthetic"; }

template <typename T>
void push_bounded(std::deque<T>& q, T v) {
    if (q.size() >= kHistoryCap) q.pop_front();
    q.push_back(std::move(v));
}

}  // namespace

struct Pipeline::Chain {
    SourceSpec spec;
    std::unique_ptr<Source> source;
    std::unique_ptr<DetectorBackend> backend;
    std::shared_ptr<RingStore> store;
    StreamHub::Channel* channel = nullptr;
    std::unique_ptr<Tracker> tracker;

    std::atomic<bool> stop{false};
    HandoffBuffer<Captured> to_process;
    HandoffBuffer<Analyzed> to_render;
    std::thread capture_thread, process_thread, render_thread;

    mutable std::mutex history_mutex;
    std::deque<PublishSample> publishes;
    std::deque<Clock::time_point> captures;

    const std::string& id() const { return spec.source.source_id; }
};

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), hub_(std::make_shared<StreamHub>()) {
    set_log_level(config_.log_level);
    if (config_.sources.empty()) fail(Errc::InvalidConfig, "no sources configured");
    std::set<std::string> ids;
    for (const auto& s : config_.sources) {
        if (!ids.insert(s.source.source_id).second) {
            fail(Errc::InvalidConfig, "duplicate source_id '" + s.source.source_id + "'");
        }
    }

    for (std::size_t i = 0; i < config_.sources.size(); ++i) {
        auto chain = std::make_unique<Chain>();
        chain->spec = config_.sources[i];
        auto& src = chain->spec.source;
        if (src.kind == SourceKind::Synthetic && !src.script) {
            src.script = std::make_shared<const SceneScript>(SceneScript::load(src.script_path));
        }
        chain->source = open_source(src);

        SourceInfo info;
        info.source_id = src.source_id;
        info.kind = source_kind_name(src.kind);
        info.fps = src.fps;
        info.width = chain->source->width();
        info.height = chain->source->height();
        info.format = chain->source->format();
        info.depth_near_mm = chain->spec.depth_near_mm;
        info.depth_far_mm = chain->spec.depth_far_mm;
        if (src.intrinsics) {
            info.intrinsics = *src.intrinsics;
            info.intrinsics.width = info.width;
            info.intrinsics.height = info.height;
            if (!info.intrinsics.valid()) {
                fail(Errc::InvalidConfig, "source '" + src.source_id + "': intrinsics need fx,fy > 0 and a principal "
                                          "point inside the image");
            }
        } else {
            info.intrinsics = default_intrinsics(info.width, info.height);
        }

        const auto& b = chain->spec.backend;
        std::unique_ptr<DetectorBackend> backend;
        if (b.type == BackendConfig::Type::External) {
            backend = std::make_unique<ExternalBackend>(b.host, b.port, b.timeout_ms);
        } else {
            auto script = b.script_path.empty() ? src.script
                                                : std::make_shared<const SceneScript>(SceneScript::load(b.script_path));
            if (!script) fail(Errc::InvalidConfig, "source '" + src.source_id + "': scripted backend has no script");
            backend = std::make_unique<ScriptedBackend>(std::move(script));
        }
        if (b.fail_every > 0 || b.fail_rate > 0) {
            backend = std::make_unique<FaultInjectingBackend>(std::move(backend), b.fail_every, b.fail_rate, b.seed);
        }
        chain->backend = std::move(backend);

        if (config_.store_enabled) {
            const auto root = (std::filesystem::path(config_.store_root) / src.source_id).string();
            chain->store = std::make_shared<RingStore>(root, config_.store_capacity);
            if (config_.storage_fail_rate > 0) {
                chain->store->inject_faults(config_.storage_fail_rate, config_.storage_fail_seed + i);
            }
        }
        chain->tracker = std::make_unique<Tracker>(config_.tracker);
        chain->channel = &hub_->add_source(std::move(info), chain->store);
        chains_.push_back(std::move(chain));
    }
    server_ = std::make_unique<StreamServer>(hub_, config_.server);
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::start() {
    {
        std::lock_guard lock(mutex_);
        if (started_) return;
        started_ = true;
    }
    server_->bind();
    server_->start();
    log(LogLevel::Info, "serving on " + bound_address());

    for (auto& owned : chains_) {
        Chain* c = owned.get();
        auto& counters = c->channel->counters;

        c->capture_thread = std::thread([c, &counters] {
            try {
                while (!c->stop.load()) {
                    auto frame = c->source->next_frame();
                    if (!frame) break;
                    const auto now = Clock::now();
                    counters.captured++;
                    {
                        std::lock_guard lock(c->history_mutex);
                        push_bounded(c->captures, now);
                    }
                    if (c->to_process.push({std::make_shared<const Frame>(std::move(*frame)), now})) counters.dropped++;
                }
            } catch (const std::exception& e) {
                log(LogLevel::Error, "source '" + c->id() + "' stopped: " + e.what());
            }
            log(LogLevel::Info, "source '" + c->id() + "' ended after " + std::to_string(counters.captured.load()) +
                                    " frames");
            c->to_process.close();
        });

        c->process_thread = std::thread([this, c, &counters] {
            const auto& info = c->channel->info;
            while (auto item = c->to_process.pop()) {
                Analyzed out;
                out.raw = item->raw;
                out.at = item->at;
                try {
                    out.display = display_frame(*item->raw, info);
                    auto dets = detect(*c->backend, out.display);
                    dets = nms(filter_by_confidence(dets, config_.confidence_threshold), config_.nms_iou);
                    out.tracks = c->tracker->step(dets);
                    out.detections = std::move(dets);
                } catch (const Error& e) {
                    out.failed = true;
                    if (e.code() == Errc::BackendFailure) counters.backend_failures++;
                    log(LogLevel::Warn, "source '" + c->id() + "' frame " + std::to_string(item->raw->frame_id) +
                                            " skipped: " + e.what());
                    if (out.display.data.empty()) continue;  // nothing displayable either
                }
                counters.processed++;
                if (c->to_render.push(std::move(out))) counters.dropped++;
            }
            c->to_render.close();
        });

        c->render_thread = std::thread([this, c, &counters] {
            const int quality = config_.server.jpeg_quality;
            while (auto item = c->to_render.pop()) {
                if (config_.overlay_delay_ms > 0) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(config_.overlay_delay_ms));
                }
                try {
                    auto raw_jpeg = std::make_shared<const std::vector<std::uint8_t>>(encode_jpeg(item->display, quality));
                    if (item->failed) {
                        c->channel->slot.publish({item->raw, std::move(raw_jpeg), std::nullopt});
                        continue;
                    }
                    std::vector<Track> confirmed;
                    for (const auto& t : item->tracks) {
                        if (t.state == TrackState::Confirmed) confirmed.push_back(t);
                    }
                    Frame annotated = draw_tracks(blend_masks(item->display, confirmed, config_.mask_alpha), item->tracks);
                    ProcessedView view;
                    view.frame_id = item->raw->frame_id;
                    view.timestamp_us = item->raw->timestamp_us;
                    view.jpeg = std::make_shared<const std::vector<std::uint8_t>>(encode_jpeg(annotated, quality));
                    view.priority = priority_score(item->tracks, config_.priority_weights);
                    view.description = describe(item->tracks);
                    view.tracks = item->tracks;

                    EntryRecord record{item->tracks, item->detections, view.priority, view.description};
                    c->channel->slot.publish({item->raw, std::move(raw_jpeg), std::move(view)});
                    const auto published = Clock::now();
                    counters.published++;
                    {
                        std::lock_guard lock(c->history_mutex);
                        push_bounded(c->publishes, PublishSample{item->raw->frame_id,
                                                                 c->channel->slot.latest()->processed_seq, item->at,
                                                                 published});
                    }
                    if (c->store) {
                        try {
                            c->store->put(*item->raw, annotated, record);
                            counters.stored++;
                        } catch (const Error& e) {
                            counters.storage_failures++;
                            log(LogLevel::Warn, "source '" + c->id() + "' frame " +
                                                    std::to_string(item->raw->frame_id) + " not stored: " + e.what());
                        }
                    }
                } catch (const std::exception& e) {
                    log(LogLevel::Error, "source '" + c->id() + "' render failed on frame " +
                                             std::to_string(item->raw->frame_id) + ": " + e.what());
                }
            }
            on_chain_finished();
        });
    }
}

void Pipeline::on_chain_finished() {
    {
        std::lock_guard lock(mutex_);
        ++finished_chains_;
    }
    cv_.notify_all();
}

bool Pipeline::finished() const {
    std::lock_guard lock(mutex_);
    return started_ && finished_chains_ == chains_.size();
}

bool Pipeline::wait_finished(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return started_ && finished_chains_ == chains_.size(); });
}

void Pipeline::stop() {
    {
        std::lock_guard lock(mutex_);
        if (stopped_) return;
        stopped_ = true;
    }
    for (auto& c : chains_) c->stop = true;
    for (auto& c : chains_) {
        if (c->capture_thread.joinable()) c->capture_thread.join();
        if (c->process_thread.joinable()) c->process_thread.join();
        if (c->render_thread.joinable()) c->render_thread.join();
    }
    if (server_) server_->stop();
}

int Pipeline::port() const { return server_->port(); }

std::string Pipeline::bound_address() const {
    return server_->config().bind_address + ":" + std::to_string(server_->port());
}

std::vector<PublishSample> Pipeline::publish_history(const std::string& source_id) const {
    for (const auto& c : chains_) {
        if (c->id() != source_id) continue;
        std::lock_guard lock(c->history_mutex);
        return {c->publishes.begin(), c->publishes.end()};
    }
    fail(Errc::NotFound, "unknown source '" + source_id + "'");
}

std::vector<Clock::time_point> Pipeline::capture_history(const std::string& source_id) const {
    for (const auto& c : chains_) {
        if (c->id() != source_id) continue;
        std::lock_guard lock(c->history_mutex);
        return {c->captures.begin(), c->captures.end()};
    }
    fail(Errc::NotFound, "unknown source '" + source_id + "'");
}

std::size_t resident_memory_bytes() {
    std::ifstream is("/proc/self/status");
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("VmRSS:", 0) == 0) {
            std::istringstream ss(line.substr(6));
            std::size_t kb = 0;
            ss >> kb;
            return kb * 1024;
        }
    }
    return 0;
}

}  // namespace firesight
