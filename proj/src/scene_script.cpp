#include "firesight/scene_script.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace firesight {

namespace {

// a + round(delta * num / den), halves rounded away from zero.
std::int32_t lerp_round(std::int32_t a, std::int32_t b, std::int64_t num, std::int64_t den) {
    const std::int64_t scaled = static_cast<std::int64_t>(b - a) * num;
    const std::int64_t q = (2 * std::abs(scaled) + den) / (2 * den);
    return a + static_cast<std::int32_t>(scaled < 0 ? -q : q);
}

BBox parse_box(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) fail(Errc::MalformedScript, "box must be [x0,y0,x1,y1]");
    for (const auto& v : j) {
        if (!v.is_number_integer()) fail(Errc::MalformedScript, "box coordinates must be integers");
    }
    BBox b{j[0].get<std::int32_t>(), j[1].get<std::int32_t>(), j[2].get<std::int32_t>(),
           j[3].get<std::int32_t>()};
    if (!b.well_formed()) fail(Errc::MalformedScript, "box requires x1 > x0 and y1 > y0");
    return b;
}

}  // namespace

SceneScript::SceneScript(std::vector<ScriptedActor> actors) : actors_(std::move(actors)) {
    for (const auto& a : actors_) {
        if (a.keyframes.empty()) fail(Errc::MalformedScript, "actor without keyframes");
        for (std::size_t i = 0; i < a.keyframes.size(); ++i) {
            if (!a.keyframes[i].box.well_formed()) fail(Errc::MalformedScript, "degenerate keyframe box");
            if (i > 0 && a.keyframes[i].frame <= a.keyframes[i - 1].frame) {
                fail(Errc::MalformedScript, "keyframe indices must strictly increase");
            }
        }
        if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) {
            fail(Errc::MalformedScript, "actor confidence outside [0,1]");
        }
        if (a.mask_inset && *a.mask_inset < 0) fail(Errc::MalformedScript, "mask inset must be >= 0");
    }
}

SceneScript SceneScript::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("actors") || !doc["actors"].is_array()) {
        fail(Errc::MalformedScript, "script must be an object with an \"actors\" array");
    }
    std::vector<ScriptedActor> actors;
    for (const auto& ja : doc["actors"]) {
        if (!ja.is_object()) fail(Errc::MalformedScript, "actor must be an object");
        ScriptedActor a;
        const auto cls = ja.value("class", std::string{});
        const auto label = parse_label(cls);
        if (!label) fail(Errc::MalformedScript, "unknown class '" + cls + "'");
        a.label = *label;
        if (ja.contains("confidence")) {
            if (!ja["confidence"].is_number()) fail(Errc::MalformedScript, "confidence must be a number");
            a.confidence = ja["confidence"].get<double>();
        }
        if (ja.contains("mask")) {
            const auto& m = ja["mask"];
            if (!m.is_object() || !m.contains("inset") || !m["inset"].is_number_integer()) {
                fail(Errc::MalformedScript, "mask must be {\"inset\": <int>}");
            }
            a.mask_inset = m["inset"].get<std::int32_t>();
        }
        if (!ja.contains("keyframes") || !ja["keyframes"].is_array()) {
            fail(Errc::MalformedScript, "actor needs a keyframes array");
        }
        for (const auto& jk : ja["keyframes"]) {
            if (!jk.is_object() || !jk.contains("frame") || !jk["frame"].is_number_unsigned()) {
                fail(Errc::MalformedScript, "keyframe needs a non-negative integer \"frame\"");
            }
            a.keyframes.push_back({jk["frame"].get<std::uint32_t>(), parse_box(jk.value("box", nlohmann::json{}))});
        }
        actors.push_back(std::move(a));
    }
    return SceneScript(std::move(actors));
}

SceneScript SceneScript::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::PathNotFound, "scene script not found: " + path);
    const auto doc = nlohmann::json::parse(is, nullptr, false);
    if (doc.is_discarded()) fail(Errc::MalformedScript, path + ": invalid JSON");
    try {
        return from_json(doc);
    } catch (const Error& e) {
        fail(Errc::MalformedScript, path + ": " + e.what());
    }
}

nlohmann::json SceneScript::to_json() const {
    nlohmann::json actors = nlohmann::json::array();
    for (const auto& a : actors_) {
        nlohmann::json ja = {{"class", label_name(a.label)}, {"confidence", a.confidence}};
        if (a.mask_inset) ja["mask"] = {{"inset", *a.mask_inset}};
        auto& kfs = ja["keyframes"] = nlohmann::json::array();
        for (const auto& k : a.keyframes) {
            kfs.push_back({{"frame", k.frame}, {"box", {k.box.x0, k.box.y0, k.box.x1, k.box.y1}}});
        }
        actors.push_back(std::move(ja));
    }
    return {{"actors", std::move(actors)}};
}

void SceneScript::check_bounds(std::uint32_t width, std::uint32_t height) const {
    for (const auto& a : actors_) {
        for (const auto& k : a.keyframes) {
            if (!k.box.inside(width, height)) {
                fail(Errc::MalformedScript, std::string(label_name(a.label)) + " keyframe at frame " +
                                                std::to_string(k.frame) + " leaves the " +
                                                std::to_string(width) + "x" + std::to_string(height) +
                                                " frame");
            }
        }
    }
}

std::vector<Detection> SceneScript::at(std::uint32_t frame_index) const {
    std::vector<Detection> out;
    for (const auto& a : actors_) {
        const auto& kfs = a.keyframes;
        if (frame_index < kfs.front().frame || frame_index > kfs.back().frame) continue;
        auto hi = std::lower_bound(kfs.begin(), kfs.end(), frame_index,
                                   [](const Keyframe& k, std::uint32_t f) { return k.frame < f; });
        BBox box;
        if (hi->frame == frame_index) {
            box = hi->box;
        } else {
            const auto lo = std::prev(hi);
            const std::int64_t num = frame_index - lo->frame;
            const std::int64_t den = hi->frame - lo->frame;
            box.x0 = lerp_round(lo->box.x0, hi->box.x0, num, den);
            box.y0 = lerp_round(lo->box.y0, hi->box.y0, num, den);
            box.x1 = std::max(box.x0 + 1, lerp_round(lo->box.x1, hi->box.x1, num, den));
            box.y1 = std::max(box.y0 + 1, lerp_round(lo->box.y1, hi->box.y1, num, den));
        }
        Detection d{a.label, a.confidence, box, std::nullopt};
        if (a.mask_inset) {
            const std::int32_t inset = *a.mask_inset;
            std::vector<std::uint8_t> bits(static_cast<std::size_t>(box.area()), 0);
            for (std::int32_t y = inset; y < box.height() - inset; ++y) {
                for (std::int32_t x = inset; x < box.width() - inset; ++x) {
                    bits[static_cast<std::size_t>(y) * box.width() + x] = 1;
                }
            }
            d.mask = encode_mask(bits);
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::uint32_t SceneScript::frame_span() const noexcept {
    std::uint32_t span = 0;
    for (const auto& a : actors_) span = std::max(span, a.keyframes.back().frame + 1);
    return span;
}

bool SceneScript::has_masks() const noexcept {
    return std::any_of(actors_.begin(), actors_.end(), [](const auto& a) { return a.mask_inset.has_value(); });
}

}  // namespace firesight
