#include "firesight/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace firesight {

Rgb color_for_id(std::uint64_t id) noexcept {
    const double hue = std::fmod(static_cast<double>(id) * 137.508, 360.0);
    constexpr double s = 0.9, v = 1.0;
    // Work in 0..255 units so the exact hue-0 case lands on 25.5 -> 26.
    const double chroma = v * 255.0 * s;
    const double m = v * 255.0 - chroma;
    const double h6 = hue / 60.0;
    const double x = chroma * (1.0 - std::fabs(std::fmod(h6, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h6) % 6) {
        case 0: r = chroma; g = x; break;
        case 1: r = x; g = chroma; break;
        case 2: g = chroma; b = x; break;
        case 3: g = x; b = chroma; break;
        case 4: r = x; b = chroma; break;
        default: r = chroma; b = x; break;
    }
    const auto q = [m](double c) { return static_cast<std::uint8_t>(std::lround(c + m)); };
    return {q(r), q(g), q(b)};
}

namespace {

struct Glyph {
    char c;
    std::array<std::uint8_t, kGlyphHeight> rows;
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
    {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E}},
    {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
    {'d', {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F}},
    {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
    {'f', {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08}},
    {'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
    {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
    {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
    {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
    {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
    {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11}},
    {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
    {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
    {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
    {'q', {0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01}},
    {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
    {'s', {0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E}},
    {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
    {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
    {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'w', {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A}},
    {'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
    {'y', {0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
    {'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
};

void put_pixel(Frame& f, std::int32_t x, std::int32_t y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<std::int32_t>(f.width) || y >= static_cast<std::int32_t>(f.height)) {
        return;
    }
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * f.width + x);
    f.data[i] = c.r;
    f.data[i + 1] = c.g;
    f.data[i + 2] = c.b;
}

void draw_text(Frame& f, std::int32_t left, std::int32_t top, std::string_view text, Rgb c) {
    for (std::size_t n = 0; n < text.size(); ++n) {
        const std::uint8_t* rows = glyph_rows(text[n]);
        const std::int32_t gx = left + static_cast<std::int32_t>(n) * kGlyphAdvance;
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int col = 0; col < kGlyphWidth; ++col) {
                if (rows[r] & (0x10 >> col)) put_pixel(f, gx + col, top + r, c);
            }
        }
    }
}

void draw_outline(Frame& f, const BBox& b, bool dashed) {
    for (std::int32_t y = b.y0; y < b.y1; ++y) {
        for (std::int32_t x = b.x0; x < b.x1; ++x) {
            const bool horizontal = y < b.y0 + kBoxThickness || y >= b.y1 - kBoxThickness;
            const bool vertical = x < b.x0 + kBoxThickness || x >= b.x1 - kBoxThickness;
            if (!horizontal && !vertical) continue;
            if (dashed) {
                const std::int32_t along = horizontal ? x - b.x0 : y - b.y0;
                if ((along / kDashRun) % 2 != 0) continue;
            }
            put_pixel(f, x, y, kBoxColor);
        }
    }
}

void check_boxes(const Frame& frame, const std::vector<Track>& tracks) {
    for (const auto& t : tracks) {
        if (!t.box.inside(frame.width, frame.height)) {
            fail(Errc::BoxOutOfBounds, "track " + std::to_string(t.track_id) + " box outside " +
                                           std::to_string(frame.width) + "x" + std::to_string(frame.height));
        }
    }
}

}  // namespace

const std::uint8_t* glyph_rows(char c) noexcept {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    for (const auto& g : kFont) {
        if (g.c == c) return g.rows.data();
    }
    return glyph_rows('?');
}

std::string track_tag(const Track& t) {
    char conf[16];
    std::snprintf(conf, sizeof conf, "%.2f", t.confidence);
    return std::string(label_name(t.label)) + " " + conf;
}

TagPlacement place_tag(const BBox& box, std::size_t text_len, std::uint32_t frame_w, std::uint32_t frame_h) {
    TagPlacement p;
    p.width = text_len == 0 ? 0 : static_cast<std::int32_t>(text_len) * kGlyphAdvance - 1;
    p.left = box.x0;
    p.top = box.y0 - 1 - kGlyphHeight;
    if (p.top < 0) {
        p.left = box.x0 + kBoxThickness + 1;
        p.top = box.y0 + kBoxThickness + 1;
    }
    const auto fw = static_cast<std::int32_t>(frame_w);
    const auto fh = static_cast<std::int32_t>(frame_h);
    p.left = std::max(0, std::min(p.left, fw - p.width));
    p.top = std::max(0, std::min(p.top, fh - kGlyphHeight));
    return p;
}

Frame draw_tracks(const Frame& frame, const std::vector<Track>& tracks) {
    require_format(frame, PixelFormat::Rgb8, "draw_tracks");
    check_boxes(frame, tracks);
    Frame out = frame;
    for (const auto& t : tracks) {
        if (t.state == TrackState::Tentative) continue;
        draw_outline(out, t.box, t.state == TrackState::Lost);
    }
    for (const auto& t : tracks) {
        if (t.state == TrackState::Tentative) continue;
        const auto tag = track_tag(t);
        const auto p = place_tag(t.box, tag.size(), frame.width, frame.height);
        draw_text(out, p.left, p.top, tag, kBoxColor);
    }
    return out;
}

Frame blend_masks(const Frame& frame, const std::vector<Track>& tracks, double alpha) {
    require_format(frame, PixelFormat::Rgb8, "blend_masks");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(Errc::InvalidArgument, "alpha must lie in [0,1]");
    check_boxes(frame, tracks);
    std::vector<const Track*> order;
    for (const auto& t : tracks) {
        if (t.last_mask) order.push_back(&t);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Track* a, const Track* b) { return a->track_id < b->track_id; });
    Frame out = frame;
    for (const Track* t : order) {
        const auto bits = decode_mask(*t->last_mask, t->box);
        const Rgb c = color_for_id(t->track_id);
        const std::array<double, 3> target{static_cast<double>(c.r), static_cast<double>(c.g),
                                           static_cast<double>(c.b)};
        const std::int32_t w = t->box.width();
        for (std::size_t k = 0; k < bits.size(); ++k) {
            if (!bits[k]) continue;
            const std::int32_t x = t->box.x0 + static_cast<std::int32_t>(k % w);
            const std::int32_t y = t->box.y0 + static_cast<std::int32_t>(k / w);
            const std::size_t i = 3 * (static_cast<std::size_t>(y) * out.width + x);
            for (int ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - alpha) * out.data[i + ch] + alpha * target[ch];
                out.data[i + ch] = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

namespace {

constexpr std::array<Rgb, 5> kDepthStops = {
    Rgb{0, 0, 128}, Rgb{0, 0, 255}, Rgb{0, 255, 255}, Rgb{255, 255, 0}, Rgb{255, 0, 0},
};

}  // namespace

Rgb depth_color(std::uint16_t depth_mm, std::int32_t near_mm, std::int32_t far_mm) noexcept {
    if (depth_mm == 0) return {0, 0, 0};
    double t = static_cast<double>(static_cast<std::int32_t>(depth_mm) - near_mm) / (far_mm - near_mm);
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 4.0;
    const int seg = std::min(static_cast<int>(pos), 3);
    const double local = pos - seg;
    const Rgb a = kDepthStops[seg], b = kDepthStops[seg + 1];
    const auto mix = [local](std::uint8_t p, std::uint8_t q) {
        return static_cast<std::uint8_t>(std::lround(p + local * (static_cast<double>(q) - p)));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

Frame colormap_depth(const Frame& frame, std::int32_t near_mm, std::int32_t far_mm) {
    require_format(frame, PixelFormat::Depth16, "colormap_depth");
    if (near_mm >= far_mm) {
        fail(Errc::BadRange, "near_mm (" + std::to_string(near_mm) + ") must be < far_mm (" +
                                 std::to_string(far_mm) + ")");
    }
    Frame out = make_frame(frame.width, frame.height, PixelFormat::Rgb8, frame.frame_id, frame.timestamp_us,
                           frame.source_id);
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        const Rgb c = depth_color(frame.sample16(i), near_mm, far_mm);
        out.data[3 * i] = c.r;
        out.data[3 * i + 1] = c.g;
        out.data[3 * i + 2] = c.b;
    }
    return out;
}

}  // namespace firesight
