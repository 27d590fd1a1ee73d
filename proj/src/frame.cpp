#include "firesight/frame.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

namespace firesight {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::SizeMismatch: return "SizeMismatch";
        case Errc::ZeroDimension: return "ZeroDimension";
        case Errc::WrongFormat: return "WrongFormat";
        case Errc::PathNotFound: return "PathNotFound";
        case Errc::MalformedFrameFile: return "MalformedFrameFile";
        case Errc::MalformedScript: return "MalformedScript";
        case Errc::NotSynthetic: return "NotSynthetic";
        case Errc::BackendFailure: return "BackendFailure";
        case Errc::BoxOutOfBounds: return "BoxOutOfBounds";
        case Errc::MalformedMask: return "MalformedMask";
        case Errc::BadRange: return "BadRange";
        case Errc::InvalidDepth: return "InvalidDepth";
        case Errc::OutOfImage: return "OutOfImage";
        case Errc::NonPositiveZ: return "NonPositiveZ";
        case Errc::IntrinsicsMismatch: return "IntrinsicsMismatch";
        case Errc::StorageFailure: return "StorageFailure";
        case Errc::NotFound: return "NotFound";
        case Errc::EncodeFailure: return "EncodeFailure";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::BindFailure: return "BindFailure";
    }
    return "Unknown";
}

std::string_view format_name(PixelFormat f) noexcept {
    switch (f) {
        case PixelFormat::Gray16: return "GRAY16";
        case PixelFormat::Rgb8: return "RGB8";
        case PixelFormat::Depth16: return "DEPTH16";
    }
    return "?";
}

std::optional<PixelFormat> parse_format(std::string_view name) noexcept {
    if (name == "GRAY16") return PixelFormat::Gray16;
    if (name == "RGB8") return PixelFormat::Rgb8;
    if (name == "DEPTH16") return PixelFormat::Depth16;
    return std::nullopt;
}

Frame make_frame(std::uint32_t width, std::uint32_t height, PixelFormat format,
                 std::uint32_t frame_id, std::uint64_t timestamp_us, std::string source_id) {
    Frame f;
    f.frame_id = frame_id;
    f.source_id = std::move(source_id);
    f.timestamp_us = timestamp_us;
    f.width = width;
    f.height = height;
    f.format = format;
    f.data.assign(f.expected_size(), 0);
    return f;
}

bool CameraIntrinsics::valid() const noexcept {
    return fx > 0 && fy > 0 && cx >= 0 && cy >= 0 && cx < width && cy < height;
}

void validate_frame(const Frame& frame) {
    if (frame.width == 0 || frame.height == 0) {
        fail(Errc::ZeroDimension, "frame " + std::to_string(frame.frame_id) + " has zero dimension (" +
                                      std::to_string(frame.width) + "x" +
                                      std::to_string(frame.height) + ")");
    }
    if (frame.data.size() != frame.expected_size()) {
        fail(Errc::SizeMismatch, "frame " + std::to_string(frame.frame_id) + ": expected " +
                                     std::to_string(frame.expected_size()) + " data bytes, got " +
                                     std::to_string(frame.data.size()));
    }
}

void require_format(const Frame& frame, PixelFormat expected, std::string_view who) {
    validate_frame(frame);
    if (frame.format != expected) {
        fail(Errc::WrongFormat, std::string(who) + " expects " + std::string(format_name(expected)) +
                                    ", got " + std::string(format_name(frame.format)));
    }
}

Frame normalize_thermal(const Frame& frame) {
    require_format(frame, PixelFormat::Gray16, "normalize_thermal");
    const std::size_t n = frame.pixel_count();
    std::uint16_t lo = 0xFFFF, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = frame.sample16(i);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Frame out = make_frame(frame.width, frame.height, PixelFormat::Rgb8, frame.frame_id,
                           frame.timestamp_us, frame.source_id);
    const std::uint64_t range = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t g = 128;
        if (range != 0) {
            // round(255 * d / range) in exact integer arithmetic
            const std::uint64_t d = frame.sample16(i) - lo;
            g = static_cast<std::uint8_t>((2 * 255 * d + range) / (2 * range));
        }
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = g;
    }
    return out;
}

// --- FGF1 ------------------------------------------------------------------

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_fgf(const Frame& frame) {
    validate_frame(frame);
    std::vector<std::uint8_t> out(kFgfHeaderSize + frame.data.size(), 0);
    std::memcpy(out.data(), "FGF1", 4);
    out[4] = static_cast<std::uint8_t>(frame.format);
    put_u32(&out[8], frame.width);
    put_u32(&out[12], frame.height);
    put_u32(&out[16], frame.frame_id);
    put_u64(&out[20], frame.timestamp_us);
    std::copy(frame.data.begin(), frame.data.end(), out.begin() + kFgfHeaderSize);
    return out;
}

Frame decode_fgf(std::span<const std::uint8_t> bytes, std::string source_id) {
    if (bytes.size() < kFgfHeaderSize) {
        fail(Errc::MalformedFrameFile, "truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (std::memcmp(bytes.data(), "FGF1", 4) != 0) fail(Errc::MalformedFrameFile, "bad magic");
    if (bytes[4] > 2) fail(Errc::MalformedFrameFile, "unknown format code " + std::to_string(bytes[4]));
    if (bytes[5] != 0 || bytes[6] != 0 || bytes[7] != 0) {
        fail(Errc::MalformedFrameFile, "nonzero reserved bytes");
    }
    Frame f;
    f.format = static_cast<PixelFormat>(bytes[4]);
    f.width = get_u32(&bytes[8]);
    f.height = get_u32(&bytes[12]);
    f.frame_id = get_u32(&bytes[16]);
    f.timestamp_us = get_u64(&bytes[20]);
    f.source_id = std::move(source_id);
    if (f.width == 0 || f.height == 0) fail(Errc::MalformedFrameFile, "zero dimension");
    const std::size_t payload = bytes.size() - kFgfHeaderSize;
    if (payload != f.expected_size()) {
        fail(Errc::MalformedFrameFile, "payload is " + std::to_string(payload) + " bytes, header implies " +
                                           std::to_string(f.expected_size()));
    }
    f.data.assign(bytes.begin() + kFgfHeaderSize, bytes.end());
    return f;
}

void write_fgf_file(const std::string& path, const Frame& frame) {
    const auto bytes = encode_fgf(frame);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(Errc::StorageFailure, "cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) fail(Errc::StorageFailure, "write failed: " + path);
}

Frame read_fgf_file(const std::string& path, std::string source_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::PathNotFound, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    try {
        return decode_fgf(bytes, std::move(source_id));
    } catch (const Error& e) {
        fail(Errc::MalformedFrameFile, path + ": " + e.what());
    }
}

}  // namespace firesight
