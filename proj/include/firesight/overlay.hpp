#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "firesight/frame.hpp"
#include "firesight/tracking.hpp"

namespace firesight {

inline constexpr Rgb kBoxColor{0, 255, 0};
inline constexpr int kBoxThickness = 2;
inline constexpr int kDashRun = 4;
inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = kGlyphWidth + 1;

/// Golden-angle hue walk (137.508 deg per id) at S=0.9, V=1.0.
Rgb color_for_id(std::uint64_t id) noexcept;

/// Row bitmaps (bit 4 = leftmost column) of the built-in 5x7 font.
/// Uppercase maps to lowercase; unknown characters render as '?'.
const std::uint8_t* glyph_rows(char c) noexcept;

/// Text shown above a track: "<label> <confidence to 2 decimals>".
std::string track_tag(const Track& t);

/// Axis-aligned pixel rectangle of a rendered tag (may extend past the frame
/// only when the frame is narrower than the text).
struct TagPlacement {
    std::int32_t left = 0, top = 0, width = 0, height = kGlyphHeight;
};

/// Anchors the tag 1 px above the box. When that would leave the frame the
/// tag moves inside the box's top-left corner, just inside the outline.
TagPlacement place_tag(const BBox& box, std::size_t text_len, std::uint32_t frame_w, std::uint32_t frame_h);

/// Draws confirmed tracks with a solid 2-px green outline and lost tracks
/// with a dashed one, each with a text tag. Tentative tracks are skipped.
Frame draw_tracks(const Frame& frame, const std::vector<Track>& tracks);

/// Shades every mask pixel toward the track's palette color. Masks are
/// applied in ascending track_id order. Tracks without masks are ignored.
Frame blend_masks(const Frame& frame, const std::vector<Track>& tracks, double alpha);

/// Five-stop jet-like map from [near_mm, far_mm]; depth 0 renders black.
Rgb depth_color(std::uint16_t depth_mm, std::int32_t near_mm, std::int32_t far_mm) noexcept;
Frame colormap_depth(const Frame& frame, std::int32_t near_mm, std::int32_t far_mm);

}  // namespace firesight
