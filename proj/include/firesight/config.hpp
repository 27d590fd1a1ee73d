#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/log.hpp"
#include "firesight/scene.hpp"
#include "firesight/sources.hpp"
#include "firesight/stream_server.hpp"
#include "firesight/tracking.hpp"

namespace firesight {

struct BackendConfig {
    enum class Type { Scripted, External };
    Type type = Type::Scripted;
    std::string host = "127.0.0.1";  // external only
    std::uint16_t port = 0;
    int timeout_ms = 2000;
    std::string script_path;  // scripted; falls back to the source's script
    // Fault injection, for tests and drills.
    std::uint32_t fail_every = 0;
    double fail_rate = 0.0;
    std::uint64_t seed = 1;
};

struct SourceSpec {
    SourceConfig source;
    BackendConfig backend;
    std::int32_t depth_near_mm = 300;
    std::int32_t depth_far_mm = 5000;
};

struct PipelineConfig {
    std::vector<SourceSpec> sources;
    double confidence_threshold = 0.5;
    double nms_iou = 0.5;
    TrackerConfig tracker;
    bool store_enabled = true;
    std::string store_root = "firesight-store";
    std::size_t store_capacity = 100;
    double storage_fail_rate = 0.0;
    std::uint64_t storage_fail_seed = 1;
    PriorityWeights priority_weights;
    double mask_alpha = 0.5;
    ServerConfig server;
    bool exit_when_sources_end = true;
    int overlay_delay_ms = 0;  // debug knob: slows the render stage
    LogLevel log_level = LogLevel::Info;
};

/// Relative paths in `doc` resolve against `base_dir`. Throws InvalidConfig.
PipelineConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = "");
/// Throws PathNotFound or InvalidConfig; messages name the file.
PipelineConfig load_config(const std::string& path);

}  // namespace firesight
