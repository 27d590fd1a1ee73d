#include "firesight/scene.hpp"

#include <cmath>

namespace firesight {

namespace {

struct Noun {
    const char* singular;
    const char* plural;
};

constexpr std::array<Noun, kClassCount> kNouns = {{
    {"firefighter", "firefighters"},
    {"civilian", "civilians"},
    {"door", "doors"},
    {"window", "windows"},
    {"ladder", "ladders"},
    {"fire", "fires"},
    {"prone person", "prone people"},
}};

}  // namespace

PriorityWeights PriorityWeights::from_json(const nlohmann::json& j) {
    PriorityWeights w;
    if (j.is_null()) return w;
    if (!j.is_object()) fail(Errc::InvalidConfig, "priority_weights must be an object");
    for (const auto& [name, value] : j.items()) {
        const auto label = parse_label(name);
        if (!label) fail(Errc::InvalidConfig, "priority_weights: unknown class '" + name + "'");
        if (!value.is_number() || value.get<double>() < 0 || !std::isfinite(value.get<double>())) {
            fail(Errc::InvalidConfig, "priority_weights: '" + name + "' must be a non-negative number");
        }
        w[*label] = value.get<double>();
    }
    return w;
}

double priority_score(const std::vector<Track>& tracks, const PriorityWeights& weights) {
    double score = 0.0;
    for (const auto& t : tracks) {
        if (t.state == TrackState::Confirmed) score += weights[t.label] * t.confidence;
    }
    return score;
}

std::string describe(const std::vector<Track>& tracks) {
    std::array<std::size_t, kClassCount> counts{};
    for (const auto& t : tracks) {
        if (t.state == TrackState::Confirmed) ++counts[static_cast<std::size_t>(t.label)];
    }
    std::string text;
    for (std::size_t i = 0; i < kClassCount; ++i) {
        if (counts[i] == 0) continue;
        if (!text.empty()) text += ", ";
        text += std::to_string(counts[i]) + " " + (counts[i] == 1 ? kNouns[i].singular : kNouns[i].plural);
    }
    return text.empty() ? "No objects detected." : text + " detected.";
}

}  // namespace firesight
