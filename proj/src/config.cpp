#include "firesight/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;

namespace firesight {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    fail(Errc::InvalidConfig, where + ": " + what);
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) bad(where, "unknown key '" + key + "'");
    }
}

double unit_interval(const json& obj, const char* key, double fallback, const std::string& where) {
    const double v = obj.value(key, fallback);
    if (!(v >= 0.0 && v <= 1.0)) bad(where, std::string(key) + " must be in [0,1]");
    return v;
}

BackendConfig parse_backend(const json& j, const std::string& where, const std::string& base) {
    check_keys(j, where, {"type", "endpoint", "timeout_ms", "script_path", "fail_every", "fail_rate", "seed"});
    BackendConfig b;
    const auto type = j.value("type", std::string("scripted"));
    if (type == "scripted") {
        b.type = BackendConfig::Type::Scripted;
    } else if (type == "external") {
        b.type = BackendConfig::Type::External;
        const auto endpoint = j.value("endpoint", std::string{});
        const auto colon = endpoint.rfind(':');
        if (colon == std::string::npos || colon == 0) bad(where, "external backend needs endpoint \"host:port\"");
        b.host = endpoint.substr(0, colon);
        int port = 0;
        try {
            std::size_t used = 0;
            port = std::stoi(endpoint.substr(colon + 1), &used);
            if (used != endpoint.size() - colon - 1) port = 0;
        } catch (const std::exception&) {
        }
        if (port <= 0 || port > 65535) bad(where, "bad endpoint port in '" + endpoint + "'");
        b.port = static_cast<std::uint16_t>(port);
    } else {
        bad(where, "unknown backend type '" + type + "'");
    }
    b.timeout_ms = j.value("timeout_ms", b.timeout_ms);
    if (b.timeout_ms <= 0) bad(where, "timeout_ms must be > 0");
    b.script_path = resolve(base, j.value("script_path", std::string{}));
    b.fail_every = j.value("fail_every", 0u);
    b.fail_rate = unit_interval(j, "fail_rate", 0.0, where);
    b.seed = j.value("seed", std::uint64_t{1});
    return b;
}

SourceSpec parse_source(const json& j, std::size_t i, const std::string& base) {
    std::string where = "sources[" + std::to_string(i) + "]";
    check_keys(j, where,
               {"source_id", "kind", "fps", "path", "loop_replay", "script_path", "width", "height", "format",
                "frames", "paced", "intrinsics", "depth_range_mm", "backend"});
    SourceSpec spec;
    auto& s = spec.source;
    s.source_id = j.value("source_id", std::string{});
    if (s.source_id.empty()) bad(where, "source_id is required");
    for (const char c : s.source_id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            bad(where, "source_id '" + s.source_id + "' may only contain [A-Za-z0-9_.-]");
        }
    }
    where += " ('" + s.source_id + "')";

    const auto kind = j.value("kind", std::string("synthetic"));
    if (kind == "synthetic") {
        s.kind = SourceKind::Synthetic;
    } else if (kind == "replay") {
        s.kind = SourceKind::Replay;
    } else {
        bad(where, "kind must be \"synthetic\" or \"replay\"");
    }
    s.fps = j.value("fps", 30.0);
    if (!(s.fps > 0) || !std::isfinite(s.fps)) bad(where, "fps must be > 0");
    s.path = resolve(base, j.value("path", std::string{}));
    s.loop_replay = j.value("loop_replay", false);
    s.script_path = resolve(base, j.value("script_path", std::string{}));
    const auto format = parse_format(j.value("format", std::string("GRAY16")));
    if (!format) bad(where, "format must be GRAY16, RGB8 or DEPTH16");
    s.format = *format;
    const std::uint32_t default_w = s.format == PixelFormat::Gray16 ? 160 : 640;
    const std::uint32_t default_h = s.format == PixelFormat::Gray16 ? 120 : 480;
    s.width = j.value("width", default_w);
    s.height = j.value("height", default_h);
    if (j.contains("frames")) s.frames = j.at("frames").get<std::uint32_t>();
    s.paced = j.value("paced", true);

    if (s.kind == SourceKind::Replay && s.path.empty()) bad(where, "replay source needs a path");
    if (s.kind == SourceKind::Synthetic) {
        if (s.script_path.empty()) bad(where, "synthetic source needs a script_path");
        if (s.width == 0 || s.height == 0) bad(where, "width and height must be > 0");
    }

    if (j.contains("intrinsics")) {
        const auto& k = j.at("intrinsics");
        check_keys(k, where + ".intrinsics", {"fx", "fy", "cx", "cy"});
        CameraIntrinsics in;
        in.fx = k.at("fx").get<double>();
        in.fy = k.at("fy").get<double>();
        in.cx = k.at("cx").get<double>();
        in.cy = k.at("cy").get<double>();
        s.intrinsics = in;  // width/height filled once the source geometry is known
    }
    if (j.contains("depth_range_mm")) {
        const auto& r = j.at("depth_range_mm");
        if (!r.is_array() || r.size() != 2) bad(where, "depth_range_mm must be [near, far]");
        spec.depth_near_mm = r[0].get<std::int32_t>();
        spec.depth_far_mm = r[1].get<std::int32_t>();
        if (spec.depth_near_mm >= spec.depth_far_mm) bad(where, "depth_range_mm needs near < far");
    }

    spec.backend = parse_backend(j.value("backend", json::object()), where + ".backend", base);
    if (spec.backend.type == BackendConfig::Type::Scripted && spec.backend.script_path.empty() &&
        s.kind == SourceKind::Replay) {
        bad(where, "scripted backend on a replay source needs backend.script_path");
    }
    return spec;
}

}  // namespace

PipelineConfig parse_config(const json& doc, const std::string& base_dir) {
    try {
        check_keys(doc, "config",
                   {"sources", "confidence_threshold", "nms_iou", "association_iou", "tracker", "store",
                    "priority_weights", "mask_alpha", "server", "exit_when_sources_end", "debug", "log_level"});
        PipelineConfig c;
        if (!doc.contains("sources") || !doc.at("sources").is_array() || doc.at("sources").empty()) {
            bad("config", "sources must be a non-empty array");
        }
        std::set<std::string> ids;
        for (std::size_t i = 0; i < doc.at("sources").size(); ++i) {
            auto spec = parse_source(doc.at("sources")[i], i, base_dir);
            if (!ids.insert(spec.source.source_id).second) {
                bad("config", "duplicate source_id '" + spec.source.source_id + "'");
            }
            c.sources.push_back(std::move(spec));
        }

        c.confidence_threshold = unit_interval(doc, "confidence_threshold", c.confidence_threshold, "config");
        c.nms_iou = unit_interval(doc, "nms_iou", c.nms_iou, "config");
        c.tracker.iou_threshold = unit_interval(doc, "association_iou", c.tracker.iou_threshold, "config");
        if (doc.contains("tracker")) {
            const auto& t = doc.at("tracker");
            check_keys(t, "tracker", {"confirm_hits", "max_misses"});
            c.tracker.confirm_hits = t.value("confirm_hits", c.tracker.confirm_hits);
            c.tracker.max_misses = t.value("max_misses", c.tracker.max_misses);
            if (c.tracker.confirm_hits < 1 || c.tracker.max_misses < 1) {
                bad("tracker", "confirm_hits and max_misses must be >= 1");
            }
        }
        if (doc.contains("store")) {
            const auto& s = doc.at("store");
            check_keys(s, "store", {"enabled", "root", "capacity", "fail_rate", "fail_seed"});
            c.store_enabled = s.value("enabled", true);
            c.store_root = s.value("root", c.store_root);
            const auto cap = s.value("capacity", std::int64_t{100});
            if (cap < 1) bad("store", "capacity must be >= 1");
            c.store_capacity = static_cast<std::size_t>(cap);
            c.storage_fail_rate = unit_interval(s, "fail_rate", 0.0, "store");
            c.storage_fail_seed = s.value("fail_seed", std::uint64_t{1});
        }
        c.store_root = resolve(base_dir, c.store_root);
        if (doc.contains("priority_weights")) c.priority_weights = PriorityWeights::from_json(doc.at("priority_weights"));
        c.mask_alpha = unit_interval(doc, "mask_alpha", c.mask_alpha, "config");
        if (doc.contains("server")) {
            const auto& s = doc.at("server");
            check_keys(s, "server", {"bind", "port", "jpeg_quality", "worker_threads", "static_dir"});
            c.server.bind_address = s.value("bind", c.server.bind_address);
            c.server.port = s.value("port", c.server.port);
            if (c.server.port < 0 || c.server.port > 65535) bad("server", "port must be in 0..65535");
            c.server.jpeg_quality = s.value("jpeg_quality", c.server.jpeg_quality);
            if (c.server.jpeg_quality < 1 || c.server.jpeg_quality > 100) bad("server", "jpeg_quality must be 1..100");
            c.server.worker_threads = s.value("worker_threads", c.server.worker_threads);
            c.server.static_dir = resolve(base_dir, s.value("static_dir", std::string{}));
        }
        c.exit_when_sources_end = doc.value("exit_when_sources_end", true);
        if (doc.contains("debug")) {
            const auto& d = doc.at("debug");
            check_keys(d, "debug", {"overlay_delay_ms"});
            c.overlay_delay_ms = d.value("overlay_delay_ms", 0);
            if (c.overlay_delay_ms < 0) bad("debug", "overlay_delay_ms must be >= 0");
        }
        const auto level = doc.value("log_level", std::string("info"));
        if (level == "debug") c.log_level = LogLevel::Debug;
        else if (level == "info") c.log_level = LogLevel::Info;
        else if (level == "warn") c.log_level = LogLevel::Warn;
        else if (level == "error") c.log_level = LogLevel::Error;
        else if (level == "off") c.log_level = LogLevel::Off;
        else bad("config", "log_level must be debug, info, warn, error or off");
        return c;
    } catch (const json::exception& e) {
        fail(Errc::InvalidConfig, std::string("config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidConfig) throw;
        fail(Errc::InvalidConfig, e.what());
    }
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::PathNotFound, "config file not found: " + path);
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        fail(Errc::InvalidConfig, path + ": not valid JSON: " + e.what());
    }
    const auto base = fs::absolute(fs::path(path)).parent_path().string();
    try {
        return parse_config(doc, base);
    } catch (const Error& e) {
        fail(e.code(), path + ": " + e.what());
    }
}

}  // namespace firesight
