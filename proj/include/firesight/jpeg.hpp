#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "firesight/frame.hpp"

namespace firesight {

inline constexpr const char* kMjpegBoundary = "frame";
inline constexpr int kDefaultJpegQuality = 85;

/// Baseline JPEG of an RGB8 frame. The frame id and timestamp are written
/// into a COM segment so stream consumers can order parts without extra
/// multipart headers. Output is a pure function of (frame, quality).
std::vector<std::uint8_t> encode_jpeg(const Frame& frame, int quality);

/// Reads the frame id back out of a COM segment written by encode_jpeg.
std::optional<std::uint32_t> jpeg_frame_id(const std::vector<std::uint8_t>& jpeg);

/// One multipart/x-mixed-replace unit.
struct StreamPart {
    std::vector<std::uint8_t> jpeg_bytes;
    std::string content_type = "image/jpeg";
    std::size_t content_length = 0;

    /// "--frame\r\nContent-Type: image/jpeg\r\nContent-Length: <n>\r\n\r\n<jpeg>\r\n"
    std::string wire() const;
};

/// Throws WrongFormat for non-RGB8 frames, InvalidArgument for quality
/// outside 1..100, EncodeFailure if the codec reports an error.
StreamPart encode_part(const Frame& frame, int quality);

std::string part_wire(const std::vector<std::uint8_t>& jpeg);

}  // namespace firesight
