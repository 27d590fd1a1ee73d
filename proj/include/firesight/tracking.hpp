#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "firesight/perception.hpp"

namespace firesight {

enum class TrackState : std::uint8_t { Tentative, Confirmed, Lost };

std::string_view track_state_name(TrackState s) noexcept;

struct Track {
    std::uint64_t track_id = 0;
    ClassLabel label = ClassLabel::Firefighter;
    BBox box;
    double confidence = 0;
    TrackState state = TrackState::Tentative;
    std::uint32_t hits = 0;    // consecutive matched frames
    std::uint32_t misses = 0;  // consecutive unmatched frames
    std::optional<MaskRle> last_mask;

    friend bool operator==(const Track&, const Track&) = default;
};

nlohmann::json track_to_json(const Track& t);

struct Association {
    struct Pair {
        std::size_t track;      // index into the tracks argument
        std::size_t detection;  // index into the detections argument
        double iou;
    };
    std::vector<Pair> matches;
    std::vector<std::size_t> unmatched_tracks;
    std::vector<std::size_t> unmatched_detections;
};

/// Greedy same-label matching in descending IoU order. Pairs with IoU below
/// the threshold are never matched; ties go to the lower track_id, then the
/// earlier detection. Unmatched index lists are ascending.
Association associate(const std::vector<Track>& tracks, const std::vector<Detection>& detections,
                      double iou_threshold);

struct TrackerConfig {
    double iou_threshold = 0.3;
    std::uint32_t confirm_hits = 3;
    std::uint32_t max_misses = 5;
};

/// Tracking-by-detection with tentative -> confirmed -> lost lifecycle. No
/// motion model; association is purely by box overlap.
class Tracker {
public:
    explicit Tracker(TrackerConfig config = {});

    /// Advances one frame. Detections should already be thresholded and
    /// suppressed. Returns the live tracks in ascending track_id order.
    std::vector<Track> step(const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    std::uint64_t next_id() const noexcept { return next_id_; }
    const TrackerConfig& config() const noexcept { return config_; }

private:
    TrackerConfig config_;
    std::vector<Track> tracks_;  // ascending track_id
    std::uint64_t next_id_ = 1;
};

}  // namespace firesight
