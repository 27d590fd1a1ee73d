#include "firesight/tracking.hpp"

#include <algorithm>

namespace firesight {

std::string_view track_state_name(TrackState s) noexcept {
    switch (s) {
        case TrackState::Tentative: return "tentative";
        case TrackState::Confirmed: return "confirmed";
        case TrackState::Lost: return "lost";
    }
    return "?";
}

nlohmann::json track_to_json(const Track& t) {
    return {
        {"track_id", t.track_id},
        {"label", label_name(t.label)},
        {"state", track_state_name(t.state)},
        {"box", {t.box.x0, t.box.y0, t.box.x1, t.box.y1}},
        {"confidence", t.confidence},
    };
}

Association associate(const std::vector<Track>& tracks, const std::vector<Detection>& detections,
                      double iou_threshold) {
    std::vector<Association::Pair> candidates;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        for (std::size_t d = 0; d < detections.size(); ++d) {
            if (tracks[t].label != detections[d].label) continue;
            const double overlap = iou(tracks[t].box, detections[d].box);
            if (overlap >= iou_threshold) candidates.push_back({t, d, overlap});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (tracks[a.track].track_id != tracks[b.track].track_id) {
            return tracks[a.track].track_id < tracks[b.track].track_id;
        }
        return a.detection < b.detection;
    });

    Association out;
    std::vector<bool> track_used(tracks.size(), false), det_used(detections.size(), false);
    for (const auto& c : candidates) {
        if (track_used[c.track] || det_used[c.detection]) continue;
        track_used[c.track] = det_used[c.detection] = true;
        out.matches.push_back(c);
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        if (!track_used[t]) out.unmatched_tracks.push_back(t);
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (!det_used[d]) out.unmatched_detections.push_back(d);
    }
    return out;
}

Tracker::Tracker(TrackerConfig config) : config_(config) {
    if (!(config_.iou_threshold >= 0.0 && config_.iou_threshold <= 1.0)) {
        fail(Errc::InvalidConfig, "tracker iou_threshold must lie in [0,1]");
    }
    if (config_.confirm_hits == 0 || config_.max_misses == 0) {
        fail(Errc::InvalidConfig, "tracker confirm_hits and max_misses must be >= 1");
    }
}

std::vector<Track> Tracker::step(const std::vector<Detection>& detections) {
    const auto assoc = associate(tracks_, detections, config_.iou_threshold);

    for (const auto& m : assoc.matches) {
        Track& t = tracks_[m.track];
        const Detection& d = detections[m.detection];
        t.box = d.box;
        t.confidence = d.confidence;
        t.last_mask = d.mask;
        t.hits += 1;
        t.misses = 0;
        if (t.state == TrackState::Lost ||
            (t.state == TrackState::Tentative && t.hits >= config_.confirm_hits)) {
            t.state = TrackState::Confirmed;
        }
    }

    std::vector<bool> remove(tracks_.size(), false);
    for (const auto i : assoc.unmatched_tracks) {
        Track& t = tracks_[i];
        t.misses += 1;
        t.hits = 0;
        if (t.state == TrackState::Confirmed) t.state = TrackState::Lost;
        if (t.misses >= config_.max_misses) remove[i] = true;
    }

    std::vector<Track> next;
    next.reserve(tracks_.size() + assoc.unmatched_detections.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (!remove[i]) next.push_back(std::move(tracks_[i]));
    }
    for (const auto di : assoc.unmatched_detections) {
        const Detection& d = detections[di];
        Track t;
        t.track_id = next_id_++;
        t.label = d.label;
        t.box = d.box;
        t.confidence = d.confidence;
        t.last_mask = d.mask;
        t.hits = 1;
        t.state = config_.confirm_hits <= 1 ? TrackState::Confirmed : TrackState::Tentative;
        next.push_back(std::move(t));
    }
    tracks_ = std::move(next);
    return tracks_;
}

}  // namespace firesight
