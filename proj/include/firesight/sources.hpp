#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "firesight/frame.hpp"
#include "firesight/perception.hpp"
#include "firesight/scene_script.hpp"

namespace firesight {

enum class SourceKind { Replay, Synthetic };

struct SourceConfig {
    std::string source_id;
    SourceKind kind = SourceKind::Synthetic;
    double fps = 30.0;

    // replay
    std::string path;
    bool loop_replay = false;

    // synthetic
    std::string script_path;
    std::shared_ptr<const SceneScript> script;  // overrides script_path when set
    std::uint32_t width = 160;
    std::uint32_t height = 120;
    PixelFormat format = PixelFormat::Gray16;
    std::optional<std::uint32_t> frames;  // defaults to the script's frame span

    /// When false, next_frame returns immediately (offline rendering, tests).
    bool paced = true;

    std::optional<CameraIntrinsics> intrinsics;
};

/// Frame period in whole microseconds, round(1e6 / fps).
std::uint64_t frame_period_us(double fps);

/// Synthetic pixel values: actors are bright filled rectangles on a dark field.
inline constexpr std::uint16_t kSynthThermalBackground = 2000;
inline constexpr std::uint16_t kSynthThermalActor = 60000;
inline constexpr std::uint16_t kSynthDepthBackground = 4000;
inline constexpr std::uint16_t kSynthDepthActor = 1500;
inline constexpr std::uint8_t kSynthRgbBackground = 20;
inline constexpr std::uint8_t kSynthRgbActor = 230;

Frame render_synthetic_frame(const SceneScript& script, std::uint32_t frame_index, std::uint32_t width,
                             std::uint32_t height, PixelFormat format);

class Source {
public:
    virtual ~Source() = default;

    /// Next frame, or nullopt at end of stream. Paced sources block until the
    /// frame's deadline (start + k * period).
    virtual std::optional<Frame> next_frame() = 0;

    /// Scripted boxes at a frame id. Throws NotSynthetic for replay sources.
    virtual std::vector<Detection> ground_truth(std::uint32_t frame_id) const;

    virtual std::uint32_t width() const noexcept = 0;
    virtual std::uint32_t height() const noexcept = 0;
    virtual PixelFormat format() const noexcept = 0;
    /// Total frames for finite sources; nullopt when looping.
    virtual std::optional<std::uint32_t> length() const noexcept = 0;

    const SourceConfig& config() const noexcept { return config_; }

protected:
    explicit Source(SourceConfig config);

    /// Sleeps until frame k's deadline when paced. Re-anchors the schedule
    /// when more than one period late so a stalled consumer does not cause a
    /// burst of back-to-back frames.
    void wait_for_deadline(std::uint64_t k);

    SourceConfig config_;
    std::uint64_t period_us_;

private:
    std::optional<std::chrono::steady_clock::time_point> start_;
};

/// Throws InvalidConfig, PathNotFound, MalformedFrameFile, or MalformedScript.
std::unique_ptr<Source> open_source(const SourceConfig& config);

struct ReplaySummary {
    std::size_t frame_count = 0;
    std::uint32_t width = 0, height = 0;
    PixelFormat format = PixelFormat::Gray16;
    std::vector<std::string> files;
};

/// Lists *.fgf files in lexicographic order and validates each. Throws
/// PathNotFound or MalformedFrameFile naming the offending file.
ReplaySummary check_replay_dir(const std::string& dir);

}  // namespace firesight
