#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/perception.hpp"

namespace firesight {

struct Keyframe {
    std::uint32_t frame = 0;
    BBox box;
};

struct ScriptedActor {
    ClassLabel label = ClassLabel::Firefighter;
    double confidence = 1.0;
    std::vector<Keyframe> keyframes;  // strictly increasing frame indices
    /// When set, the actor carries a rectangular mask equal to its box shrunk
    /// by this many pixels on every side.
    std::optional<std::int32_t> mask_inset;
};

/// Deterministic ground truth for synthetic scenes: actors move along
/// linearly interpolated keyframed boxes.
///
/// File format:
///   {"actors":[{"class":"door","confidence":0.97,"mask":{"inset":2},
///               "keyframes":[{"frame":0,"box":[x0,y0,x1,y1]}, ...]}]}
class SceneScript {
public:
    SceneScript() = default;
    explicit SceneScript(std::vector<ScriptedActor> actors);

    /// Throws MalformedScript.
    static SceneScript from_json(const nlohmann::json& doc);
    /// Throws PathNotFound or MalformedScript.
    static SceneScript load(const std::string& path);

    nlohmann::json to_json() const;

    /// Throws MalformedScript if any keyframe box leaves a width x height frame.
    void check_bounds(std::uint32_t width, std::uint32_t height) const;

    /// Interpolated actor boxes at a frame index, in actor order. Actors are
    /// absent before their first and after their last keyframe.
    std::vector<Detection> at(std::uint32_t frame_index) const;

    /// One past the last keyframe index over all actors (0 when empty).
    std::uint32_t frame_span() const noexcept;
    bool has_masks() const noexcept;

    const std::vector<ScriptedActor>& actors() const noexcept { return actors_; }

private:
    std::vector<ScriptedActor> actors_;
};

}  // namespace firesight
