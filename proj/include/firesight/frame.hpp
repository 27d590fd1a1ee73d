#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "firesight/error.hpp"

namespace firesight {

/// Pixel layouts carried by a Frame. 16-bit formats are little-endian.
enum class PixelFormat : std::uint8_t {
    Gray16 = 0,   // raw thermal counts
    Rgb8 = 1,
    Depth16 = 2,  // millimeters, 0 = invalid
};

constexpr std::size_t bytes_per_pixel(PixelFormat f) noexcept {
    return f == PixelFormat::Rgb8 ? 3 : 2;
}

std::string_view format_name(PixelFormat f) noexcept;
std::optional<PixelFormat> parse_format(std::string_view name) noexcept;

struct Frame {
    std::uint32_t frame_id = 0;
    std::string source_id;
    std::uint64_t timestamp_us = 0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    PixelFormat format = PixelFormat::Rgb8;
    std::vector<std::uint8_t> data;

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * height;
    }
    std::size_t expected_size() const noexcept {
        return pixel_count() * bytes_per_pixel(format);
    }

    /// Reads a 16-bit sample at linear pixel index (Gray16/Depth16 only).
    std::uint16_t sample16(std::size_t index) const noexcept {
        return static_cast<std::uint16_t>(data[2 * index] | (data[2 * index + 1] << 8));
    }
    void set_sample16(std::size_t index, std::uint16_t v) noexcept {
        data[2 * index] = static_cast<std::uint8_t>(v & 0xFF);
        data[2 * index + 1] = static_cast<std::uint8_t>(v >> 8);
    }

    friend bool operator==(const Frame&, const Frame&) = default;
};

using FramePtr = std::shared_ptr<const Frame>;

/// Allocates a zero-filled frame with correctly sized data.
Frame make_frame(std::uint32_t width, std::uint32_t height, PixelFormat format,
                 std::uint32_t frame_id = 0, std::uint64_t timestamp_us = 0,
                 std::string source_id = {});

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    std::uint32_t width = 0, height = 0;

    bool valid() const noexcept;
};

/// Throws SizeMismatch or ZeroDimension when the frame violates its layout
/// invariants. Cross-frame monotonicity is not checked here.
void validate_frame(const Frame& frame);

/// Same check as validate_frame, but also enforces the pixel format.
void require_format(const Frame& frame, PixelFormat expected, std::string_view who);

/// Per-frame min-max stretch of GRAY16 to an RGB8 gray image. A flat frame
/// maps to uniform 128.
Frame normalize_thermal(const Frame& frame);

// --- FGF1 raw frame files -------------------------------------------------

/// magic(4) format(1) reserved(3) width(4) height(4) frame_id(4) timestamp_us(8)
inline constexpr std::size_t kFgfHeaderSize = 28;

std::vector<std::uint8_t> encode_fgf(const Frame& frame);

/// Parses an FGF1 byte image. Throws MalformedFrameFile on any header or
/// length problem.
Frame decode_fgf(std::span<const std::uint8_t> bytes, std::string source_id = {});

void write_fgf_file(const std::string& path, const Frame& frame);
Frame read_fgf_file(const std::string& path, std::string source_id = {});

}  // namespace firesight
