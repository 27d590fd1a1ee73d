#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "firesight/frame.hpp"

namespace firesight {

/// Closed label set. Integer codes are stable and used for ordering.
enum class ClassLabel : std::uint8_t {
    Firefighter = 0,
    Civilian = 1,
    Door = 2,
    Window = 3,
    Ladder = 4,
    Fire = 5,
    PronePerson = 6,
};

inline constexpr std::size_t kClassCount = 7;
inline constexpr std::array<ClassLabel, kClassCount> kAllClasses = {
    ClassLabel::Firefighter, ClassLabel::Civilian, ClassLabel::Door,  ClassLabel::Window,
    ClassLabel::Ladder,      ClassLabel::Fire,     ClassLabel::PronePerson,
};

constexpr int label_code(ClassLabel l) noexcept { return static_cast<int>(l); }
std::string_view label_name(ClassLabel l) noexcept;
std::optional<ClassLabel> parse_label(std::string_view name) noexcept;

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BBox {
    std::int32_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    std::int32_t width() const noexcept { return x1 - x0; }
    std::int32_t height() const noexcept { return y1 - y0; }
    std::int64_t area() const noexcept {
        return static_cast<std::int64_t>(width()) * height();
    }
    bool well_formed() const noexcept { return x1 > x0 && y1 > y0; }
    bool inside(std::uint32_t frame_w, std::uint32_t frame_h) const noexcept {
        return well_formed() && x0 >= 0 && y0 >= 0 && x1 <= static_cast<std::int64_t>(frame_w) &&
               y1 <= static_cast<std::int64_t>(frame_h);
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b) noexcept;

/// Binary mask over a box region, run-length encoded row-major with
/// alternating runs that start with a background count (which may be 0).
struct MaskRle {
    std::vector<std::uint32_t> runs;

    friend bool operator==(const MaskRle&, const MaskRle&) = default;
};

MaskRle encode_mask(const std::vector<std::uint8_t>& bits);

/// Decodes to one byte (0/1) per box pixel. Throws MalformedMask when the
/// run lengths do not sum to the box area.
std::vector<std::uint8_t> decode_mask(const MaskRle& rle, const BBox& box);

struct Detection {
    ClassLabel label = ClassLabel::Firefighter;
    double confidence = 0;
    BBox box;
    std::optional<MaskRle> mask;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws BoxOutOfBounds, MalformedMask, or InvalidArgument (confidence
/// outside [0,1]).
void validate_detection(const Detection& d, std::uint32_t frame_w, std::uint32_t frame_h);

/// Descending confidence; ties by (label code, x0, y0).
bool detection_order(const Detection& a, const Detection& b) noexcept;
void sort_detections(std::vector<Detection>& dets);

std::vector<Detection> filter_by_confidence(const std::vector<Detection>& dets, double threshold);

/// Greedy per-label suppression. Input must already be in detection_order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j);

// --- Backends --------------------------------------------------------------

class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;

    virtual std::string name() const = 0;
    virtual bool produces_masks() const = 0;

    /// Backend-specific inference. Callers go through detect(), which adds
    /// validation and ordering.
    virtual std::vector<Detection> infer(const Frame& frame) = 0;
};

/// Validates the frame, runs the backend, checks every detection against
/// the frame bounds, and returns them in detection_order. Any backend error
/// surfaces as Errc::BackendFailure.
std::vector<Detection> detect(DetectorBackend& backend, const Frame& frame);

class SceneScript;

/// Echoes the scene script's ground truth for the frame's id.
class ScriptedBackend final : public DetectorBackend {
public:
    explicit ScriptedBackend(std::shared_ptr<const SceneScript> script);

    std::string name() const override { return "scripted"; }
    bool produces_masks() const override;
    std::vector<Detection> infer(const Frame& frame) override;

private:
    std::shared_ptr<const SceneScript> script_;
};

/// Talks to an out-of-process model over TCP. Each request is a u32 LE length
/// followed by one FGF1 frame; each reply is a u32 LE length followed by a
/// JSON array of detections.
class ExternalBackend final : public DetectorBackend {
public:
    ExternalBackend(std::string host, std::uint16_t port, int timeout_ms = 2000);
    ~ExternalBackend() override;

    ExternalBackend(const ExternalBackend&) = delete;
    ExternalBackend& operator=(const ExternalBackend&) = delete;

    std::string name() const override { return "external:" + host_ + ":" + std::to_string(port_); }
    bool produces_masks() const override { return true; }
    std::vector<Detection> infer(const Frame& frame) override;

private:
    void connect_if_needed();
    void disconnect() noexcept;

    std::string host_;
    std::uint16_t port_;
    int timeout_ms_;
    int fd_ = -1;
};

/// Wraps another backend and fails selected calls; used for fault drills.
class FaultInjectingBackend final : public DetectorBackend {
public:
    /// Fails every `every`-th call (1-based) when every > 0, and additionally
    /// with probability `rate` drawn from a seeded generator.
    FaultInjectingBackend(std::unique_ptr<DetectorBackend> inner, std::uint32_t every, double rate,
                          std::uint64_t seed);

    std::string name() const override { return "faulty(" + inner_->name() + ")"; }
    bool produces_masks() const override { return inner_->produces_masks(); }
    std::vector<Detection> infer(const Frame& frame) override;

private:
    std::unique_ptr<DetectorBackend> inner_;
    std::uint32_t every_;
    double rate_;
    std::uint64_t calls_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace firesight
