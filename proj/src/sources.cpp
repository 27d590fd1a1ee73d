#include "firesight/sources.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

namespace fs = std::filesystem;

namespace firesight {

std::uint64_t frame_period_us(double fps) {
    return static_cast<std::uint64_t>(std::llround(1e6 / fps));
}

Frame render_synthetic_frame(const SceneScript& script, std::uint32_t frame_index, std::uint32_t width,
                             std::uint32_t height, PixelFormat format) {
    Frame f = make_frame(width, height, format, frame_index);
    const auto fill = [&](std::size_t i, bool actor) {
        switch (format) {
            case PixelFormat::Gray16:
                f.set_sample16(i, actor ? kSynthThermalActor : kSynthThermalBackground);
                break;
            case PixelFormat::Depth16:
                f.set_sample16(i, actor ? kSynthDepthActor : kSynthDepthBackground);
                break;
            case PixelFormat::Rgb8:
                f.data[3 * i] = f.data[3 * i + 1] = f.data[3 * i + 2] =
                    actor ? kSynthRgbActor : kSynthRgbBackground;
                break;
        }
    };
    for (std::size_t i = 0; i < f.pixel_count(); ++i) fill(i, false);
    for (const auto& d : script.at(frame_index)) {
        const BBox& b = d.box;
        const std::int32_t x0 = std::max(0, b.x0), y0 = std::max(0, b.y0);
        const std::int32_t x1 = std::min<std::int32_t>(b.x1, static_cast<std::int32_t>(width));
        const std::int32_t y1 = std::min<std::int32_t>(b.y1, static_cast<std::int32_t>(height));
        for (std::int32_t y = y0; y < y1; ++y) {
            for (std::int32_t x = x0; x < x1; ++x) fill(static_cast<std::size_t>(y) * width + x, true);
        }
    }
    return f;
}

// --- Source base ------------------------------------------------------------

Source::Source(SourceConfig config)
    : config_(std::move(config)), period_us_(frame_period_us(config_.fps)) {}

std::vector<Detection> Source::ground_truth(std::uint32_t) const {
    fail(Errc::NotSynthetic, "source '" + config_.source_id + "' is not synthetic");
}

void Source::wait_for_deadline(std::uint64_t k) {
    if (!config_.paced) return;
    using namespace std::chrono;
    const auto now = steady_clock::now();
    if (!start_) start_ = now;
    const microseconds period(period_us_);
    auto deadline = *start_ + k * period;
    if (now > deadline + period) {
        start_ = now - k * period;
        deadline = now;
    }
    std::this_thread::sleep_until(deadline);
}

namespace {

class SyntheticSource final : public Source {
public:
    SyntheticSource(SourceConfig config, std::shared_ptr<const SceneScript> script)
        : Source(std::move(config)), script_(std::move(script)) {
        script_->check_bounds(config_.width, config_.height);
        frames_ = config_.frames.value_or(script_->frame_span());
    }

    std::optional<Frame> next_frame() override {
        if (next_ >= frames_) return std::nullopt;
        Frame f = render_synthetic_frame(*script_, next_, config_.width, config_.height, config_.format);
        f.source_id = config_.source_id;
        f.timestamp_us = next_ * period_us_;
        wait_for_deadline(next_);
        ++next_;
        return f;
    }

    std::vector<Detection> ground_truth(std::uint32_t frame_id) const override {
        return script_->at(frame_id);
    }

    std::uint32_t width() const noexcept override { return config_.width; }
    std::uint32_t height() const noexcept override { return config_.height; }
    PixelFormat format() const noexcept override { return config_.format; }
    std::optional<std::uint32_t> length() const noexcept override { return frames_; }

private:
    std::shared_ptr<const SceneScript> script_;
    std::uint32_t frames_ = 0;
    std::uint32_t next_ = 0;
};

class ReplaySource final : public Source {
public:
    ReplaySource(SourceConfig config, std::vector<Frame> frames)
        : Source(std::move(config)), frames_(std::move(frames)) {}

    std::optional<Frame> next_frame() override {
        if (emitted_ >= frames_.size() && !config_.loop_replay) return std::nullopt;
        Frame f = frames_[emitted_ % frames_.size()];
        f.frame_id = static_cast<std::uint32_t>(emitted_);
        f.timestamp_us = emitted_ * period_us_;
        f.source_id = config_.source_id;
        wait_for_deadline(emitted_);
        ++emitted_;
        return f;
    }

    std::uint32_t width() const noexcept override { return frames_.front().width; }
    std::uint32_t height() const noexcept override { return frames_.front().height; }
    PixelFormat format() const noexcept override { return frames_.front().format; }
    std::optional<std::uint32_t> length() const noexcept override {
        if (config_.loop_replay) return std::nullopt;
        return static_cast<std::uint32_t>(frames_.size());
    }

private:
    std::vector<Frame> frames_;
    std::uint64_t emitted_ = 0;
};

std::vector<std::string> list_fgf_files(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) fail(Errc::PathNotFound, "replay directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file() && e.path().extension() == ".fgf") files.push_back(e.path().string());
    }
    if (ec) fail(Errc::PathNotFound, "cannot list " + dir + ": " + ec.message());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(Errc::PathNotFound, "replay directory has no .fgf files: " + dir);
    return files;
}

}  // namespace

ReplaySummary check_replay_dir(const std::string& dir) {
    ReplaySummary s;
    s.files = list_fgf_files(dir);
    for (const auto& path : s.files) {
        const Frame f = read_fgf_file(path);
        if (s.frame_count == 0) {
            s.width = f.width;
            s.height = f.height;
            s.format = f.format;
        } else if (f.width != s.width || f.height != s.height || f.format != s.format) {
            fail(Errc::MalformedFrameFile, path + ": geometry/format differs from the first frame");
        }
        ++s.frame_count;
    }
    return s;
}

std::unique_ptr<Source> open_source(const SourceConfig& config) {
    if (config.source_id.empty()) fail(Errc::InvalidConfig, "source_id must not be empty");
    if (!(config.fps > 0) || !std::isfinite(config.fps)) {
        fail(Errc::InvalidConfig, "source '" + config.source_id + "': fps must be > 0");
    }
    if (config.kind == SourceKind::Replay) {
        std::vector<Frame> frames;
        for (const auto& path : list_fgf_files(config.path)) {
            Frame f = read_fgf_file(path, config.source_id);
            if (!frames.empty() && (f.width != frames.front().width || f.height != frames.front().height ||
                                    f.format != frames.front().format)) {
                fail(Errc::MalformedFrameFile, path + ": geometry/format differs from the first frame");
            }
            frames.push_back(std::move(f));
        }
        return std::make_unique<ReplaySource>(config, std::move(frames));
    }
    if (config.width == 0 || config.height == 0) {
        fail(Errc::InvalidConfig, "source '" + config.source_id + "': zero frame size");
    }
    auto script = config.script;
    if (!script) {
        if (config.script_path.empty()) {
            fail(Errc::InvalidConfig, "synthetic source '" + config.source_id + "' needs a script_path");
        }
        script = std::make_shared<const SceneScript>(SceneScript::load(config.script_path));
    }
    return std::make_unique<SyntheticSource>(config, std::move(script));
}

}  // namespace firesight
