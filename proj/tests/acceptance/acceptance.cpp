// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "firesight/config.hpp"
#include "firesight/depth_geom.hpp"
#include "firesight/jpeg.hpp"
#include "firesight/overlay.hpp"
#include "firesight/pipeline.hpp"
#include "firesight/scene.hpp"
#include "firesight/sources.hpp"
#include "firesight/store.hpp"
#include "support.hpp"

using namespace firesight;
using namespace std::chrono_literals;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Thrown by check() to end a criterion early with a reason.
struct Failed {
    std::string why;
};

void check(bool ok, const std::string& why) {
    if (!ok) throw Failed{why};
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

json pipeline_doc(const fst::TempDir& dir, const std::string& script, bool exit_at_end) {
    return {
        {"sources", json::array({{{"source_id", "thermal0"},
                                  {"kind", "synthetic"},
                                  {"script_path", script},
                                  {"fps", 30},
                                  {"width", 160},
                                  {"height", 120},
                                  {"format", "GRAY16"}}})},
        {"store", {{"root", dir / "store"}}},
        {"server", {{"bind", "127.0.0.1"}, {"port", 0}}},
        {"exit_when_sources_end", exit_at_end},
        {"log_level", "error"},
    };
}

// A firefighter crossing the frame and a fire that stays put.
void write_walk_script(const std::string& path, std::uint32_t frames) {
    ScriptedActor walker;  // paces back and forth at 1 px/frame
    walker.label = ClassLabel::Firefighter;
    walker.confidence = 0.9;
    for (std::uint32_t k = 0;; k += 80) {
        const std::uint32_t f = std::min(k, frames - 1);
        const int x = (k / 80) % 2 ? 80 : 0;
        walker.keyframes.push_back({f, {x, 30, x + 24, 90}});
        if (f == frames - 1) break;
    }
    SceneScript s({walker, fst::still_actor(ClassLabel::Fire, 0.8, {110, 10, 150, 50}, frames)});
    fst::write_text(path, s.to_json().dump());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- criteria ---------------------------------------------------------------

std::string throughput() {
    fst::TempDir dir;
    const std::uint32_t frames = 30 * 64;  // 64 s of video; the window below uses 60 s of it
    write_walk_script(dir / "walk.json", frames);
    Pipeline p(parse_config(pipeline_doc(dir, dir / "walk.json", true), dir.path()));
    p.start();
    check(p.wait_finished(std::chrono::seconds(frames / 30 + 30)), "pipeline did not finish");
    p.stop();

    const auto hist = p.publish_history("thermal0");
    check(hist.size() > 1, "no publishes");
    const auto& c = p.hub()->find("thermal0")->counters;
    // Count publishes inside a 60 s window opened by the first publish.
    const auto t0 = hist.front().published;
    std::size_t in_window = 0;
    for (const auto& s : hist) in_window += s.published - t0 <= 60s;
    const double fps = in_window / 60.0;
    // Sequence numbers must be contiguous: every publish in the window is a distinct frame.
    for (std::size_t i = 1; i < hist.size(); ++i) {
        check(hist[i].seq == hist[i - 1].seq + 1, "slot sequence gap at " + std::to_string(i));
    }
    std::vector<double> lat;
    for (const auto& s : hist) lat.push_back(std::chrono::duration<double, std::milli>(s.published - s.captured).count());
    const double med = median(lat);
    const std::string detail = fmt("%.3f fps over 60 s", fps) + fmt(", median latency %.2f ms", med) +
                               ", published " + std::to_string(c.published.load()) + "/" +
                               std::to_string(c.captured.load()) + ", dropped " + std::to_string(c.dropped.load());
    check(fps >= 30.0, detail);
    check(med < 33.0, detail);
    return detail;
}

std::string ring_store() {
    std::mt19937_64 rng(99);
    std::ostringstream detail;
    for (std::size_t n : {1u, 99u, 100u, 101u, 250u}) {
        fst::TempDir dir;
        RingStore store(dir.path());
        Frame raw, proc;
        std::string id;
        for (std::size_t i = 0; i < n; ++i) {
            raw = fst::random_frame(rng, 160, 120, PixelFormat::Gray16, static_cast<std::uint32_t>(i));
            proc = fst::random_frame(rng, 160, 120, PixelFormat::Rgb8, static_cast<std::uint32_t>(i));
            id = store.put(raw, proc, {});
        }
        const auto want_count = (n - 1) % 100 + 1, want_epoch = (n - 1) / 100;
        check(store.size() == want_count && store.epoch() == want_epoch,
              "N=" + std::to_string(n) + ": count " + std::to_string(store.size()) + " epoch " +
                  std::to_string(store.epoch()));
        const auto got = store.get(id);
        check(encode_fgf(got.raw) == encode_fgf(raw) && encode_fgf(got.processed) == encode_fgf(proc),
              "N=" + std::to_string(n) + ": round trip differs");
        detail << "N=" << n << "->(" << store.size() << "," << store.epoch() << ") ";
    }
    return detail.str() + "bit-exact";
}

std::string mjpeg() {
    fst::TempDir dir;
    write_walk_script(dir / "walk.json", 600);
    Pipeline p(parse_config(pipeline_doc(dir, dir / "walk.json", false), dir.path()));
    p.start();
    fst::HttpStream s(p.port(), "/streams/thermal0/processed");
    check(s.status() == 200, "status " + std::to_string(s.status()));
    fst::MultipartParser parser(kMjpegBoundary);
    const auto parts = fst::read_parts(s, parser, 100, 30000ms);
    p.stop();
    check(parser.framing_errors() == 0, "framing error: " + parser.last_error());
    check(parts.size() >= 100, "only " + std::to_string(parts.size()) + " parts");
    std::int64_t last = -1;
    for (const auto& part : parts) {
        check(std::stoul(part.headers.at("content-length")) == part.body.size(), "content-length mismatch");
        check(fst::jpeg_well_formed(part.body), "malformed JPEG body");
        const auto id = jpeg_frame_id({part.body.begin(), part.body.end()});
        check(id && static_cast<std::int64_t>(*id) > last, "frame ids not increasing");
        last = *id;
    }
    return std::to_string(parts.size()) + " parts, 0 framing errors, lengths exact";
}

// Runs the real detect -> filter -> nms -> tracker chain over rendered frames
// and maps each track id to the ground-truth actor it overlaps.
std::map<std::uint64_t, std::set<std::size_t>> identity_run(const std::vector<ScriptedActor>& actors) {
    auto script = std::make_shared<const SceneScript>(actors);
    SourceConfig cfg;
    cfg.source_id = "s";
    cfg.script = script;
    cfg.paced = false;
    cfg.format = PixelFormat::Rgb8;
    cfg.width = 640;
    cfg.height = 480;
    auto src = open_source(cfg);
    ScriptedBackend backend(script);
    Tracker tracker;
    std::map<std::uint64_t, std::set<std::size_t>> owners;
    while (auto f = src->next_frame()) {
        const auto truth = src->ground_truth(f->frame_id);
        const auto dets = nms(filter_by_confidence(detect(backend, *f), 0.5), 0.5);
        for (const auto& t : tracker.step(dets)) {
            for (std::size_t a = 0; a < truth.size(); ++a) {
                if (iou(t.box, truth[a].box) > 0.5) owners[t.track_id].insert(a);
            }
        }
    }
    return owners;
}

std::string tracker_identity() {
    const auto one = identity_run({fst::moving_actor(ClassLabel::Firefighter, 0.9, {0, 200, 40, 300}, 2, 0, 300)});
    check(one.size() == 1, std::to_string(one.size()) + " ids for one actor");
    const auto two = identity_run({fst::moving_actor(ClassLabel::Firefighter, 0.9, {0, 20, 40, 120}, 2, 0, 300),
                                   fst::moving_actor(ClassLabel::Civilian, 0.85, {600, 300, 640, 400}, -2, 0, 300)});
    check(two.size() == 2, std::to_string(two.size()) + " ids for two actors");
    std::set<std::size_t> covered;
    for (const auto& [id, actors] : two) {
        check(actors.size() == 1, "track " + std::to_string(id) + " swapped actors");
        covered.insert(*actors.begin());
    }
    check(covered.size() == 2, "one actor never tracked");
    return "1 actor -> 1 id; 2 actors -> 2 ids, no swaps (300 frames each)";
}

std::string association_oracle() {
    std::mt19937_64 rng(31337);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = fst::random_box(rng, 48, 48), b = fst::random_box(rng, 48, 48);
        worst = std::max(worst, std::fabs(iou(a, b) - fst::pixel_iou(a, b)));
    }
    check(worst <= 1e-9, fmt("iou max error %.3g", worst));
    const double thresholds[] = {0.0, 0.1, 0.3, 0.5, 0.7};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Track> tracks;
        std::vector<Detection> dets;
        for (int i = 0, n = static_cast<int>(rng() % 7); i < n; ++i) {
            tracks.push_back(fst::make_track(1 + rng() % 1000, static_cast<ClassLabel>(rng() % 2),
                                             fst::random_box(rng, 20, 20), 0.5));
        }
        for (int i = 0, n = static_cast<int>(rng() % 7); i < n; ++i) {
            Detection d;
            d.label = static_cast<ClassLabel>(rng() % 2);
            d.box = (!tracks.empty() && rng() % 3 == 0) ? tracks[rng() % tracks.size()].box : fst::random_box(rng, 20, 20);
            d.confidence = 0.9;
            dets.push_back(d);
        }
        // ids must be unique for the tie rule to be meaningful
        std::set<std::uint64_t> ids;
        for (auto& t : tracks) {
            while (!ids.insert(t.track_id).second) ++t.track_id;
        }
        const double thr = thresholds[rng() % 5];
        const auto got = associate(tracks, dets, thr);
        const auto want = fst::oracle_associate(tracks, dets, thr);
        check(got.matches.size() == want.matches.size(), "set " + std::to_string(trial) + ": match count");
        for (std::size_t m = 0; m < got.matches.size(); ++m) {
            check(got.matches[m].track == want.matches[m].track && got.matches[m].detection == want.matches[m].detection,
                  "set " + std::to_string(trial) + ": match " + std::to_string(m));
        }
        check(got.unmatched_tracks == want.unmatched_tracks && got.unmatched_detections == want.unmatched_detections,
              "set " + std::to_string(trial) + ": unmatched lists");
    }
    return fmt("1000 pairs max |iou - pixel oracle| = %.1g", worst) + "; 200 sets identical to exhaustive greedy";
}

std::string overlay_golden() {
    std::size_t n = 0;
    for (const auto& [name, frame] : fst::golden_scenes()) {
        const auto golden = read_fgf_file(std::string(FIRESIGHT_GOLDEN_DIR) + "/" + name + ".fgf");
        check(encode_fgf(golden) == encode_fgf(frame), name + " differs from golden");
        ++n;
    }
    std::mt19937_64 rng(4);
    const Frame f = fst::random_frame(rng, 160, 120, PixelFormat::Rgb8);
    auto t = fst::make_track(3, ClassLabel::Fire, {10, 10, 50, 40}, 0.9);
    t.last_mask = encode_mask(std::vector<std::uint8_t>(40 * 30, 1));
    check(draw_tracks(f, {}) == f, "draw_tracks with no tracks changed the frame");
    check(blend_masks(f, {t}, 0.0) == f, "alpha 0 changed the frame");
    check(blend_masks(f, {}, 0.5) == f, "blend with no tracks changed the frame");
    return std::to_string(n) + " golden frames byte-identical; identity cases exact";
}

std::string deprojection() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> focal(100, 1500), frac(0, 1);
    double worst_rt = 0, worst_lin = 0;
    for (int i = 0; i < 10000; ++i) {
        CameraIntrinsics k;
        k.width = 16 + rng() % 1905;
        k.height = 16 + rng() % 1065;
        k.fx = focal(rng);
        k.fy = focal(rng);
        k.cx = frac(rng) * k.width;
        k.cy = frac(rng) * k.height;
        const std::int64_t u = rng() % k.width, v = rng() % k.height;
        const std::uint32_t d = 1 + rng() % 30000;
        const auto p = deproject(u, v, d, k);
        const auto uv = project(p, k);
        worst_rt = std::max(worst_rt, std::hypot(uv.u - u, uv.v - v));
        const auto p2 = deproject(u, v, 2 * d, k);
        for (const auto [a, b] : {std::pair{p2.x, p.x}, std::pair{p2.y, p.y}, std::pair{p2.z, p.z}}) {
            if (b != 0) worst_lin = std::max(worst_lin, std::fabs(a - 2 * b) / std::fabs(2 * b));
            else worst_lin = std::max(worst_lin, std::fabs(a));
        }
    }
    const auto detail = fmt("round trip max %.2g px", worst_rt) + fmt(", linearity max rel %.2g", worst_lin);
    check(worst_rt < 1e-9 && worst_lin <= 1e-12, detail);
    return detail;
}

std::string backpressure() {
    fst::TempDir dir;
    const std::uint32_t frames = 30 * 25;
    write_walk_script(dir / "walk.json", frames);
    auto doc = pipeline_doc(dir, dir / "walk.json", true);
    doc["debug"] = {{"overlay_delay_ms", 200}};  // render stage capped at 5 fps
    doc["sources"][0]["backend"] = {{"type", "scripted"}, {"fail_rate", 0.1}, {"seed", 42}};
    doc["log_level"] = "off";
    Pipeline p(parse_config(doc, dir.path()));
    p.start();

    // RSS: steady state is the mean over seconds 4-6; the bound is checked to the end.
    std::vector<std::size_t> rss;
    const auto start = Clock::now();
    std::size_t steady = 0, peak = 0;
    json api_sources;
    while (!p.wait_finished(250ms)) {
        const auto now = Clock::now();
        const auto r = resident_memory_bytes();
        if (now - start >= 4s && now - start < 6s) rss.push_back(r);
        if (now - start >= 6s) {
            if (!steady && !rss.empty()) {
                std::size_t sum = 0;
                for (auto x : rss) sum += x;
                steady = sum / rss.size();
            }
            peak = std::max(peak, r);
        }
        if (now - start > 120s) break;
    }
    api_sources = fst::get_json(p.port(), "/api/sources");
    p.stop();

    const auto caps = p.capture_history("thermal0");
    check(caps.size() == frames, "captured " + std::to_string(caps.size()));
    const double rate = (caps.size() - 1) / std::chrono::duration<double>(caps.back() - caps.front()).count();
    const auto& c = p.hub()->find("thermal0")->counters;
    const auto& row = api_sources.at(0);
    const std::uint64_t api_failures = row.at("backend_failures");
    const std::uint64_t api_dropped = row.at("frames_dropped");
    const double fail_share = double(api_failures) / double(c.processed.load());
    std::string detail = fmt("capture %.2f fps", rate) + fmt(", RSS peak/steady %.2f", double(peak) / steady) +
                         ", published " + std::to_string(c.published.load()) + ", dropped " +
                         std::to_string(api_dropped) + ", backend failures " + std::to_string(api_failures) +
                         fmt(" (%.1f%% of processed)", 100 * fail_share);
    check(std::fabs(rate - 30.0) <= 1.5, detail);
    check(steady > 0 && peak < 2 * steady, detail);
    check(api_failures == c.backend_failures.load() && api_failures > 0, detail);
    check(fail_share > 0.05 && fail_share < 0.15, detail);
    check(api_dropped == c.dropped.load() && api_dropped > 0, detail);
    check(c.published.load() <= 30 * 25 / 6 + 5, detail);  // overlay really ran at <= 5 fps
    return detail;
}

std::string priority_query() {
    // Twenty frames with staggered entries so the score changes as tracks confirm.
    ScriptedActor prone;
    prone.label = ClassLabel::PronePerson;
    prone.confidence = 0.9;
    prone.keyframes = {{2, {10, 80, 60, 110}}, {19, {10, 80, 60, 110}}};
    ScriptedActor fire;
    fire.label = ClassLabel::Fire;
    fire.confidence = 0.75;
    fire.keyframes = {{0, {100, 10, 150, 60}}, {12, {100, 10, 150, 60}}};
    ScriptedActor door;
    door.label = ClassLabel::Door;
    door.confidence = 0.6;
    door.keyframes = {{5, {70, 5, 95, 70}}, {19, {70, 5, 95, 70}}};
    ScriptedActor faint;  // below the confidence threshold: never detected
    faint.label = ClassLabel::Civilian;
    faint.confidence = 0.3;
    faint.keyframes = {{0, {0, 0, 8, 8}}, {19, {0, 0, 8, 8}}};
    const std::vector<ScriptedActor> actors{prone, fire, door, faint};

    // Hand-computed expectation: an actor contributes weight*conf from its
    // third consecutive visible frame; weights 8 / 5 / 1.
    auto expected = [&](std::uint32_t k) {
        double score = 0;
        const double weights[] = {8.0, 5.0, 1.0};
        for (std::size_t a = 0; a < 3; ++a) {
            const auto first = actors[a].keyframes.front().frame, last = actors[a].keyframes.back().frame;
            if (k >= first + 2 && k <= last) score += weights[a] * actors[a].confidence;
        }
        return score;
    };

    auto script = std::make_shared<const SceneScript>(actors);
    ScriptedBackend backend(script);
    Tracker tracker;
    const PriorityWeights weights;
    std::map<std::uint32_t, double> scores;
    for (std::uint32_t k = 0; k < 20; ++k) {
        const Frame f = render_synthetic_frame(*script, k, 160, 120, PixelFormat::Rgb8);
        Frame g = f;
        g.frame_id = k;
        const auto tracks = tracker.step(nms(filter_by_confidence(detect(backend, g), 0.5), 0.5));
        const double got = priority_score(tracks, weights);
        check(std::fabs(got - expected(k)) < 1e-12,
              "frame " + std::to_string(k) + fmt(": score %.4f", got) + fmt(" vs %.4f", expected(k)));
        scores[k] = got;
    }

    // The same script through the running pipeline, then /api/query.
    fst::TempDir dir;
    fst::write_text(dir / "p.json", script->to_json().dump());
    auto doc = pipeline_doc(dir, dir / "p.json", false);
    doc["sources"][0]["frames"] = 20;
    Pipeline p(parse_config(doc, dir.path()));
    p.start();
    const auto deadline = Clock::now() + 20s;
    while (p.hub()->find("thermal0")->counters.published + p.hub()->find("thermal0")->counters.dropped < 20 &&
           Clock::now() < deadline) {
        std::this_thread::sleep_for(50ms);
    }
    std::this_thread::sleep_for(200ms);  // let the final store.put land

    const auto all = fst::get_json(p.port(), "/api/query");
    check(!all.empty(), "store empty");
    // Oracle: filter the full entry list by the contract and sort it independently.
    struct Row {
        std::string id;
        double priority;
        std::uint64_t ts;
        std::vector<std::pair<std::string, double>> dets;
    };
    std::vector<Row> rows;
    for (const auto& e : all) {
        Row r{e["entry_id"], e["priority"], e["timestamp_us"], {}};
        const std::uint32_t k = e["frame_id"];
        check(std::fabs(r.priority - scores.at(k)) < 1e-12, "stored priority differs at frame " + std::to_string(k));
        for (const auto& d : e["detections"]) r.dets.emplace_back(d["label"], d["confidence"]);
        rows.push_back(std::move(r));
    }
    struct Q {
        std::string url;
        std::set<std::string> classes;
        double min_conf;
    };
    const std::vector<Q> queries = {
        {"/api/query?classes=fire", {"fire"}, 0.0},
        {"/api/query?classes=prone_person,door&min_conf=0.7", {"prone_person", "door"}, 0.7},
        {"/api/query?min_conf=0.8", {}, 0.8},
        {"/api/query?classes=civilian", {"civilian"}, 0.0},
        {"/api/query?classes=door&min_conf=0.6", {"door"}, 0.6},
    };
    for (const auto& q : queries) {
        std::vector<const Row*> want;
        for (const auto& r : rows) {
            bool hit = q.classes.empty() && q.min_conf <= 0;
            for (const auto& [label, conf] : r.dets) hit = hit || ((q.classes.empty() || q.classes.count(label)) && conf >= q.min_conf);
            if (hit) want.push_back(&r);
        }
        std::stable_sort(want.begin(), want.end(), [](const Row* a, const Row* b) {
            return a->priority != b->priority ? a->priority > b->priority : a->ts > b->ts;
        });
        const auto got = fst::get_json(p.port(), q.url);
        check(got.size() == want.size(), q.url + ": " + std::to_string(got.size()) + " vs " + std::to_string(want.size()));
        for (std::size_t i = 0; i < want.size(); ++i) check(got[i]["entry_id"] == want[i]->id, q.url + ": order");
    }
    check(fst::http_get(p.port(), "/api/query?classes=dragon").status == 400, "unknown class accepted");
    p.stop();
    return "20 frames match hand-computed scores; " + std::to_string(queries.size()) + " queries over " +
           std::to_string(rows.size()) + " entries match the filter contract";
}

}  // namespace

int main() {
    set_log_level(LogLevel::Error);
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"throughput", throughput},
        {"ring_store", ring_store},
        {"mjpeg_conformance", mjpeg},
        {"tracker_identity", tracker_identity},
        {"association_iou_oracle", association_oracle},
        {"overlay_golden", overlay_golden},
        {"deprojection_round_trip", deprojection},
        {"backpressure_fault_tolerance", backpressure},
        {"priority_query", priority_query},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        std::string line;
        bool ok = false;
        try {
            line = fn();
            ok = true;
        } catch (const Failed& f) {
            line = f.why;
        } catch (const std::exception& e) {
            line = std::string("exception: ") + e.what();
        }
        failures += !ok;
        std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), line.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures ? 1 : 0;
}
