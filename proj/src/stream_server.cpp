#include "firesight/stream_server.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <netinet/in.h>
#include <netinet/tcp.h>

#include <httplib.h>

#include "firesight/jpeg.hpp"
#include "firesight/overlay.hpp"

namespace firesight {

// --- LatestSlot ---------------------------------------------------------------

std::uint64_t LatestSlot::publish(Update update) {
    std::function<void()> listener;
    std::uint64_t seq;
    {
        std::lock_guard lock(mutex_);
        auto next = std::make_shared<SlotState>(*state_);
        next->seq = state_->seq + 1;
        next->raw_seq = next->seq;
        if (update.raw_frame) {
            next->raw_frame_id = update.raw_frame->frame_id;
            next->raw_timestamp_us = update.raw_frame->timestamp_us;
        }
        next->raw_frame = std::move(update.raw_frame);
        next->raw_jpeg = std::move(update.raw_jpeg);
        if (update.processed) {
            next->processed = std::move(update.processed);
            next->processed_seq = state_->processed_seq + 1;
        }
        seq = next->seq;
        state_ = std::move(next);
        listener = on_publish_;
    }
    cv_.notify_all();
    if (listener) listener();
    return seq;
}

std::shared_ptr<const SlotState> LatestSlot::latest() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::shared_ptr<const SlotState> LatestSlot::wait_newer(std::uint64_t seen, Watch what,
                                                        std::chrono::milliseconds timeout) const {
    const auto counter = [what](const SlotState& s) {
        switch (what) {
            case Watch::Raw: return s.raw_seq;
            case Watch::Processed: return s.processed_seq;
            case Watch::Any: break;
        }
        return s.seq;
    };
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return counter(*state_) > seen; })) return nullptr;
    return state_;
}

void LatestSlot::set_listener(std::function<void()> on_publish) {
    std::lock_guard lock(mutex_);
    on_publish_ = std::move(on_publish);
}

// --- StreamHub ----------------------------------------------------------------

StreamHub::Channel& StreamHub::add_source(SourceInfo info, std::shared_ptr<RingStore> store) {
    std::lock_guard lock(mutex_);
    for (const auto& c : channels_) {
        if (c->info.source_id == info.source_id) {
            fail(Errc::InvalidConfig, "duplicate source_id '" + info.source_id + "'");
        }
    }
    auto ch = std::make_unique<Channel>();
    ch->info = std::move(info);
    ch->store = std::move(store);
    ch->slot.set_listener([this] { notify(); });
    channels_.push_back(std::move(ch));
    return *channels_.back();
}

StreamHub::Channel* StreamHub::find(const std::string& source_id) {
    std::lock_guard lock(mutex_);
    for (auto& c : channels_) {
        if (c->info.source_id == source_id) return c.get();
    }
    return nullptr;
}

const StreamHub::Channel* StreamHub::find(const std::string& source_id) const {
    return const_cast<StreamHub*>(this)->find(source_id);
}

std::vector<std::string> StreamHub::source_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& c : channels_) ids.push_back(c->info.source_id);
    return ids;
}

std::uint64_t StreamHub::version() const {
    std::lock_guard lock(mutex_);
    return version_;
}

std::uint64_t StreamHub::wait_version(std::uint64_t seen, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return version_ > seen; });
    return version_;
}

void StreamHub::notify() {
    {
        std::lock_guard lock(mutex_);
        ++version_;
    }
    cv_.notify_all();
}

// --- JSON views -----------------------------------------------------------------

nlohmann::json latest_json(const SourceInfo& info, const SlotState& s) {
    nlohmann::json j = {
        {"source_id", info.source_id},
        {"seq", s.processed_seq},
        {"raw_frame_id", s.raw_frame ? nlohmann::json(s.raw_frame_id) : nlohmann::json(nullptr)},
    };
    if (s.processed) {
        const auto& p = *s.processed;
        auto tracks = nlohmann::json::array();
        for (const auto& t : p.tracks) tracks.push_back(track_to_json(t));
        j["frame_id"] = p.frame_id;
        j["timestamp_us"] = p.timestamp_us;
        j["tracks"] = std::move(tracks);
        j["description"] = p.description;
        j["priority"] = p.priority;
    } else {
        j["frame_id"] = nullptr;
        j["timestamp_us"] = nullptr;
        j["tracks"] = nlohmann::json::array();
        j["description"] = "No objects detected.";
        j["priority"] = 0.0;
    }
    return j;
}

nlohmann::json latest_json(const StreamHub::Channel& ch) { return latest_json(ch.info, *ch.slot.latest()); }

nlohmann::json source_json(const StreamHub::Channel& ch) {
    auto kinds = nlohmann::json::array({"raw", "processed"});
    if (ch.info.format == PixelFormat::Depth16) kinds.push_back("points");
    const auto& c = ch.counters;
    return {
        {"source_id", ch.info.source_id},
        {"fps", ch.info.fps},
        {"width", ch.info.width},
        {"height", ch.info.height},
        {"kinds", std::move(kinds)},
        {"format", format_name(ch.info.format)},
        {"source_kind", ch.info.kind},
        {"frames_captured", c.captured.load()},
        {"frames_processed", c.processed.load()},
        {"frames_published", c.published.load()},
        {"frames_dropped", c.dropped.load()},
        {"frames_stored", c.stored.load()},
        {"backend_failures", c.backend_failures.load()},
        {"storage_failures", c.storage_failures.load()},
    };
}

Frame display_frame(const Frame& raw, const SourceInfo& info) {
    switch (raw.format) {
        case PixelFormat::Gray16: return normalize_thermal(raw);
        case PixelFormat::Depth16: return colormap_depth(raw, info.depth_near_mm, info.depth_far_mm);
        case PixelFormat::Rgb8: validate_frame(raw); return raw;
    }
    fail(Errc::WrongFormat, "unknown pixel format");
}

// --- StreamServer -----------------------------------------------------------------

namespace {

constexpr auto kPollInterval = std::chrono::milliseconds(100);

void json_reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(body.dump(), "application/json");
}

void error_reply(httplib::Response& res, int status, const std::string& message) {
    json_reply(res, status, {{"error", message}});
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string html_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

struct StreamServer::Impl {
    httplib::Server http;
    std::thread thread;
};

StreamServer::StreamServer(std::shared_ptr<StreamHub> hub, ServerConfig config)
    : impl_(std::make_unique<Impl>()), hub_(std::move(hub)), config_(std::move(config)) {
    auto& svr = impl_->http;
    const auto workers = std::max<std::size_t>(4, config_.worker_threads);
    svr.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    svr.set_keep_alive_max_count(100);
    // Small send buffers keep a slow viewer close to the live frame instead of
    // letting the kernel queue seconds of video.
    svr.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        int sndbuf = 64 * 1024;
        ::setsockopt(sock, SOL_SOCKET, SO_SNDBUF, &sndbuf, sizeof sndbuf);
        // Writability waits until queued-but-unsent bytes drain, so the next
        // part is picked from the slot when the viewer is actually ready.
        int lowat = 16 * 1024;
        ::setsockopt(sock, IPPROTO_TCP, TCP_NOTSENT_LOWAT, &lowat, sizeof lowat);
    });

    auto hub_ptr = hub_;

    svr.Get("/", [hub_ptr](const httplib::Request&, httplib::Response& res) {
        std::string html =
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>firesight</title></head><body>\n"
            "<h1>firesight streams</h1>\n";
        for (const auto& id : hub_ptr->source_ids()) {
            const auto e = html_escape(id);
            html += "<h2>" + e + "</h2>\n<p><a href=\"/streams/" + e + "/raw\">raw</a> | <a href=\"/streams/" + e +
                    "/processed\">processed</a> | <a href=\"/api/latest/" + e + "\">latest</a>";
            const auto* ch = hub_ptr->find(id);
            if (ch && ch->info.format == PixelFormat::Depth16) {
                html += " | <a href=\"/api/points/" + e + "?stride=8\">points</a>";
            }
            html += "</p>\n<img src=\"/streams/" + e + "/processed\" alt=\"" + e + " processed\">\n";
        }
        html +=
            "<h2>API</h2>\n<ul>\n<li><a href=\"/api/sources\">/api/sources</a></li>\n"
            "<li><a href=\"/api/priority\">/api/priority</a></li>\n"
            "<li><a href=\"/api/query?classes=fire,prone_person\">/api/query?classes=fire,prone_person</a></li>\n"
            "<li><a href=\"/events\">/events</a></li>\n</ul>\n</body></html>\n";
        res.set_content(html, "text/html; charset=utf-8");
    });

    svr.Get(R"(/streams/([^/]+)/([^/]+))", [hub_ptr](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const std::string variant = req.matches[2];
        auto* ch = hub_ptr->find(id);
        if (!ch) return error_reply(res, 404, "unknown source '" + id + "'");
        if (variant != "raw" && variant != "processed") {
            return error_reply(res, 404, "unknown stream variant '" + variant + "'");
        }
        const bool processed = variant == "processed";
        res.set_header("Cache-Control", "no-cache, no-store");
        res.set_header("Pragma", "no-cache");
        auto seen = std::make_shared<std::uint64_t>(0);
        res.set_content_provider(
            std::string("multipart/x-mixed-replace; boundary=") + kMjpegBoundary,
            [ch, processed, seen](std::size_t, httplib::DataSink& sink) {
                const auto watch = processed ? LatestSlot::Watch::Processed : LatestSlot::Watch::Raw;
                const auto state = ch->slot.wait_newer(*seen, watch, kPollInterval);
                if (!state) return true;
                *seen = processed ? state->processed_seq : state->raw_seq;
                const JpegBytes jpeg = processed ? (state->processed ? state->processed->jpeg : nullptr)
                                                 : state->raw_jpeg;
                if (!jpeg) return true;
                const auto part = part_wire(*jpeg);
                return sink.write(part.data(), part.size());
            });
    });

    svr.Get("/api/sources", [hub_ptr](const httplib::Request&, httplib::Response& res) {
        auto arr = nlohmann::json::array();
        for (const auto& id : hub_ptr->source_ids()) {
            if (const auto* ch = hub_ptr->find(id)) arr.push_back(source_json(*ch));
        }
        json_reply(res, 200, arr);
    });

    svr.Get(R"(/api/latest/([^/]+))", [hub_ptr](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto* ch = hub_ptr->find(id);
        if (!ch) return error_reply(res, 404, "unknown source '" + id + "'");
        json_reply(res, 200, latest_json(*ch));
    });

    svr.Get("/api/priority", [hub_ptr](const httplib::Request&, httplib::Response& res) {
        std::vector<nlohmann::json> rows;
        for (const auto& id : hub_ptr->source_ids()) {
            if (const auto* ch = hub_ptr->find(id)) rows.push_back(latest_json(*ch));
        }
        std::stable_sort(rows.begin(), rows.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
            const double pa = a["priority"].get<double>(), pb = b["priority"].get<double>();
            if (pa != pb) return pa > pb;
            return a["source_id"].get<std::string>() < b["source_id"].get<std::string>();
        });
        json_reply(res, 200, nlohmann::json(rows));
    });

    svr.Get("/api/query", [hub_ptr](const httplib::Request& req, httplib::Response& res) {
        std::set<ClassLabel> classes;
        if (req.has_param("classes")) {
            for (const auto& name : split_csv(req.get_param_value("classes"))) {
                const auto label = parse_label(name);
                if (!label) return error_reply(res, 400, "unknown class '" + name + "'");
                classes.insert(*label);
            }
        }
        double min_conf = 0.0;
        if (req.has_param("min_conf")) {
            const auto text = req.get_param_value("min_conf");
            const auto v = parse_number(text);
            if (!v || *v < 0.0 || *v > 1.0) {
                return error_reply(res, 400, "min_conf must be a number in [0,1], got '" + text + "'");
            }
            min_conf = *v;
        }
        std::vector<EntrySummary> all;
        for (const auto& id : hub_ptr->source_ids()) {
            const auto* ch = hub_ptr->find(id);
            if (!ch || !ch->store) continue;
            auto part = ch->store->query(classes, min_conf);
            all.insert(all.end(), part.begin(), part.end());
        }
        std::stable_sort(all.begin(), all.end(), [](const EntrySummary& a, const EntrySummary& b) {
            if (a.priority != b.priority) return a.priority > b.priority;
            if (a.timestamp_us != b.timestamp_us) return a.timestamp_us > b.timestamp_us;
            return a.source_id < b.source_id;
        });
        auto arr = nlohmann::json::array();
        for (const auto& s : all) arr.push_back(summary_to_json(s));
        json_reply(res, 200, arr);
    });

    svr.Get(R"(/api/points/([^/]+))", [hub_ptr](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto* ch = hub_ptr->find(id);
        if (!ch) return error_reply(res, 404, "unknown source '" + id + "'");
        if (ch->info.format != PixelFormat::Depth16) {
            return error_reply(res, 400, "source '" + id + "' is not a depth source");
        }
        std::uint32_t stride = 1;
        if (req.has_param("stride")) {
            const auto text = req.get_param_value("stride");
            const auto v = parse_number(text);
            if (!v || *v < 1 || *v != std::floor(*v) || *v > 1e6) {
                return error_reply(res, 400, "stride must be a positive integer, got '" + text + "'");
            }
            stride = static_cast<std::uint32_t>(*v);
        }
        const auto state = ch->slot.latest();
        if (!state->raw_frame) return error_reply(res, 404, "no depth frame captured yet");
        try {
            json_reply(res, 200, points_to_json(depth_frame_to_points(*state->raw_frame, ch->info.intrinsics, stride)));
        } catch (const Error& e) {
            error_reply(res, 400, e.what());
        }
    });

    svr.Get(R"(/api/entries/([^/]+)/([^/]+))", [hub_ptr](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const std::string entry = req.matches[2];
        const auto* ch = hub_ptr->find(id);
        if (!ch) return error_reply(res, 404, "unknown source '" + id + "'");
        if (!ch->store) return error_reply(res, 404, "source '" + id + "' has no store");
        try {
            json_reply(res, 200, ch->store->get(entry).metadata);
        } catch (const Error& e) {
            error_reply(res, 404, e.what());
        }
    });

    const int quality = config_.jpeg_quality;
    svr.Get(R"(/api/entries/([^/]+)/([^/]+)/(raw|processed)\.jpg)",
            [hub_ptr, quality](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                const auto* ch = hub_ptr->find(id);
                if (!ch) return error_reply(res, 404, "unknown source '" + id + "'");
                if (!ch->store) return error_reply(res, 404, "source '" + id + "' has no store");
                try {
                    const auto stored = ch->store->get(req.matches[2]);
                    const Frame shown = req.matches[3] == "raw" ? display_frame(stored.raw, ch->info)
                                                               : display_frame(stored.processed, ch->info);
                    const auto jpeg = encode_jpeg(shown, quality);
                    res.set_header("Access-Control-Allow-Origin", "*");
                    res.set_content(std::string(jpeg.begin(), jpeg.end()), "image/jpeg");
                } catch (const Error& e) {
                    error_reply(res, 404, e.what());
                }
            });

    svr.Get("/events", [hub_ptr](const httplib::Request&, httplib::Response& res) {
        res.set_header("Cache-Control", "no-cache");
        res.set_header("Access-Control-Allow-Origin", "*");
        struct Cursor {
            std::uint64_t version = 0;
            std::map<std::string, std::uint64_t> seen;
        };
        auto cursor = std::make_shared<Cursor>();
        res.set_content_provider("text/event-stream", [hub_ptr, cursor](std::size_t, httplib::DataSink& sink) {
            std::string batch;
            for (const auto& id : hub_ptr->source_ids()) {
                const auto* ch = hub_ptr->find(id);
                if (!ch) continue;
                const auto state = ch->slot.latest();
                auto& seen = cursor->seen[id];
                if (state->processed_seq <= seen) continue;
                seen = state->processed_seq;
                batch += "event: frame\ndata: " + latest_json(ch->info, *state).dump() + "\n\n";
            }
            if (!batch.empty()) return sink.write(batch.data(), batch.size());
            cursor->version = hub_ptr->wait_version(cursor->version, kPollInterval);
            return true;
        });
    });

    if (!config_.static_dir.empty()) svr.set_mount_point("/console", config_.static_dir);
}

StreamServer::~StreamServer() { stop(); }

int StreamServer::bind() {
    std::signal(SIGPIPE, SIG_IGN);
    auto& svr = impl_->http;
    if (config_.port == 0) {
        port_ = svr.bind_to_any_port(config_.bind_address);
    } else {
        port_ = svr.bind_to_port(config_.bind_address, config_.port) ? config_.port : -1;
    }
    if (port_ <= 0) {
        fail(Errc::BindFailure, "cannot bind " + config_.bind_address + ":" + std::to_string(config_.port));
    }
    return port_;
}

void StreamServer::start() {
    if (port_ <= 0) bind();
    impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void StreamServer::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace firesight
