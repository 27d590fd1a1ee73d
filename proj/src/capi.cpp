#include "firesight/firesight.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "firesight/config.hpp"
#include "firesight/pipeline.hpp"
#include "firesight/scene_script.hpp"
#include "firesight/sources.hpp"

struct fs_pipeline {
    std::unique_ptr<firesight::Pipeline> impl;
};

namespace {

thread_local std::string g_last_error;

fs_status status_for(firesight::Errc code) {
    using firesight::Errc;
    switch (code) {
        case Errc::InvalidConfig:
        case Errc::MalformedScript:
        case Errc::IntrinsicsMismatch:
        case Errc::BadRange: return FS_ERR_CONFIG;
        case Errc::PathNotFound: return FS_ERR_PATH_NOT_FOUND;
        case Errc::MalformedFrameFile:
        case Errc::SizeMismatch:
        case Errc::ZeroDimension: return FS_ERR_MALFORMED_FRAME;
        case Errc::BindFailure: return FS_ERR_BIND;
        case Errc::StorageFailure: return FS_ERR_STORAGE;
        case Errc::InvalidArgument: return FS_ERR_INVALID_ARGUMENT;
        default: return FS_ERR_INTERNAL;
    }
}

template <typename F>
fs_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return FS_OK;
    } catch (const firesight::Error& e) {
        g_last_error = e.what();
        return status_for(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FS_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return FS_ERR_INTERNAL;
    }
}

fs_status invalid(const char* what) {
    g_last_error = what;
    return FS_ERR_INVALID_ARGUMENT;
}

fs_status copy_out(const std::string& s, char* buf, size_t len) {
    if (!buf || len <= s.size()) {
        g_last_error = "buffer too small";
        return FS_ERR_BUFFER_TOO_SMALL;
    }
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return FS_OK;
}

}  // namespace

extern "C" {

FS_API const char* fs_version(void) { return FIRESIGHT_VERSION; }

FS_API const char* fs_last_error(void) { return g_last_error.c_str(); }

FS_API fs_status fs_pipeline_create_from_file(const char* config_path, fs_pipeline** out) {
    if (!config_path || !out) return invalid("config_path and out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        auto p = std::make_unique<fs_pipeline>();
        p->impl = std::make_unique<firesight::Pipeline>(firesight::load_config(config_path));
        *out = p.release();
    });
}

FS_API fs_status fs_pipeline_create_from_json(const char* config_json, const char* base_dir, fs_pipeline** out) {
    if (!config_json || !out) return invalid("config_json and out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        const auto doc = nlohmann::json::parse(config_json, nullptr, false);
        if (doc.is_discarded()) firesight::fail(firesight::Errc::InvalidConfig, "config is not valid JSON");
        auto p = std::make_unique<fs_pipeline>();
        p->impl = std::make_unique<firesight::Pipeline>(firesight::parse_config(doc, base_dir ? base_dir : ""));
        *out = p.release();
    });
}

FS_API fs_status fs_pipeline_start(fs_pipeline* p) {
    if (!p) return invalid("NULL pipeline");
    return guarded([&] { p->impl->start(); });
}

FS_API fs_status fs_pipeline_bound_address(const fs_pipeline* p, char* buf, size_t buf_len) {
    if (!p) return invalid("NULL pipeline");
    return copy_out(p->impl->bound_address(), buf, buf_len);
}

FS_API int fs_pipeline_port(const fs_pipeline* p) { return p ? p->impl->port() : -1; }

FS_API fs_status fs_pipeline_wait(fs_pipeline* p, int timeout_ms, int* finished, int* exit_when_done) {
    if (!p) return invalid("NULL pipeline");
    return guarded([&] {
        const bool done = p->impl->wait_finished(std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms));
        if (finished) *finished = done ? 1 : 0;
        if (exit_when_done) *exit_when_done = p->impl->config().exit_when_sources_end ? 1 : 0;
    });
}

FS_API void fs_pipeline_request_stop(fs_pipeline* p) {
    if (p) p->impl->stop();
}

FS_API void fs_pipeline_destroy(fs_pipeline* p) { delete p; }

FS_API fs_status fs_replay_check(const char* dir, uint64_t* frame_count, uint32_t* width, uint32_t* height,
                                 char* format_buf, size_t format_len) {
    if (!dir) return invalid("NULL directory");
    fs_status st = FS_OK;
    const auto rc = guarded([&] {
        const auto summary = firesight::check_replay_dir(dir);
        if (frame_count) *frame_count = summary.frame_count;
        if (width) *width = summary.width;
        if (height) *height = summary.height;
        if (format_buf) st = copy_out(std::string(firesight::format_name(summary.format)), format_buf, format_len);
    });
    return rc != FS_OK ? rc : st;
}

FS_API fs_status fs_synth_render(const char* script_path, const char* out_dir, uint32_t frames, const char* format,
                                 uint32_t width, uint32_t height) {
    if (!script_path || !out_dir) return invalid("script_path and out_dir must not be NULL");
    if (frames == 0) return invalid("frames must be >= 1");
    return guarded([&] {
        const auto fmt = firesight::parse_format(format ? format : "GRAY16");
        if (!fmt) firesight::fail(firesight::Errc::InvalidArgument, std::string("unknown format '") + format + "'");
        const bool thermal = *fmt == firesight::PixelFormat::Gray16;
        const std::uint32_t w = width ? width : (thermal ? 160 : 640);
        const std::uint32_t h = height ? height : (thermal ? 120 : 480);
        const auto script = firesight::SceneScript::load(script_path);
        script.check_bounds(w, h);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) firesight::fail(firesight::Errc::StorageFailure, std::string("cannot create ") + out_dir);
        const auto period = firesight::frame_period_us(30.0);
        for (std::uint32_t i = 0; i < frames; ++i) {
            auto f = firesight::render_synthetic_frame(script, i, w, h, *fmt);
            f.timestamp_us = i * period;
            char name[32];
            std::snprintf(name, sizeof name, "frame_%06u.fgf", i);
            firesight::write_fgf_file((std::filesystem::path(out_dir) / name).string(), f);
        }
    });
}

}  // extern "C"
