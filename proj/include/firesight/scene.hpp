#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/tracking.hpp"

namespace firesight {

/// Per-class scoring weight, indexed by label code.
struct PriorityWeights {
    std::array<double, kClassCount> weight{1.0, 4.0, 1.0, 1.0, 1.0, 5.0, 8.0};

    double operator[](ClassLabel l) const noexcept { return weight[static_cast<std::size_t>(l)]; }
    double& operator[](ClassLabel l) noexcept { return weight[static_cast<std::size_t>(l)]; }

    /// Overrides defaults from {"fire": 5, ...}. Throws InvalidConfig on
    /// unknown classes or negative values.
    static PriorityWeights from_json(const nlohmann::json& j);
};

/// Sum of weight(label) * confidence over confirmed tracks.
double priority_score(const std::vector<Track>& tracks, const PriorityWeights& weights);

/// "2 firefighters, 1 door detected." over confirmed tracks, in label-code
/// order; "No objects detected." when there are none.
std::string describe(const std::vector<Track>& tracks);

}  // namespace firesight
