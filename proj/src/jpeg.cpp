#include "firesight/jpeg.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <jpeglib.h>

namespace firesight {

namespace {

struct ErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void on_message(j_common_ptr) {}

constexpr const char* kComTag = "firesight frame=";

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Frame& frame, int quality) {
    require_format(frame, PixelFormat::Rgb8, "encode_jpeg");
    if (quality < 1 || quality > 100) fail(Errc::InvalidArgument, "jpeg quality must be 1..100");

    // Built before setjmp: nothing with a destructor may live between the
    // setjmp and a longjmp out of libjpeg.
    const std::string comment = kComTag + std::to_string(frame.frame_id) + " ts=" + std::to_string(frame.timestamp_us);
    const std::size_t stride = static_cast<std::size_t>(frame.width) * 3;

    jpeg_compress_struct cinfo{};
    ErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = on_error;
    err.base.output_message = on_message;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;

    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        fail(Errc::EncodeFailure, std::string("jpeg: ") + err.message);
    }

    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = frame.width;
    cinfo.image_height = frame.height;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_compress(&cinfo, TRUE);

    jpeg_write_marker(&cinfo, JPEG_COM, reinterpret_cast<const JOCTET*>(comment.data()),
                      static_cast<unsigned int>(comment.size()));

    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(frame.data.data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    std::vector<std::uint8_t> out(buffer, buffer + size);
    std::free(buffer);
    return out;
}

std::optional<std::uint32_t> jpeg_frame_id(const std::vector<std::uint8_t>& jpeg) {
    // Walk marker segments up to SOS.
    std::size_t i = 2;
    while (i + 4 <= jpeg.size() && jpeg[i] == 0xFF) {
        const std::uint8_t marker = jpeg[i + 1];
        const std::size_t len = (static_cast<std::size_t>(jpeg[i + 2]) << 8) | jpeg[i + 3];
        if (marker == 0xDA || len < 2 || i + 2 + len > jpeg.size()) break;
        if (marker == 0xFE) {
            const std::string text(reinterpret_cast<const char*>(&jpeg[i + 4]), len - 2);
            if (text.rfind(kComTag, 0) == 0) {
                return static_cast<std::uint32_t>(std::strtoul(text.c_str() + std::strlen(kComTag), nullptr, 10));
            }
        }
        i += 2 + len;
    }
    return std::nullopt;
}

std::string part_wire(const std::vector<std::uint8_t>& jpeg) {
    std::string out;
    out.reserve(jpeg.size() + 96);
    out += "--";
    out += kMjpegBoundary;
    out += "\r\nContent-Type: image/jpeg\r\nContent-Length: ";
    out += std::to_string(jpeg.size());
    out += "\r\n\r\n";
    out.append(reinterpret_cast<const char*>(jpeg.data()), jpeg.size());
    out += "\r\n";
    return out;
}

std::string StreamPart::wire() const { return part_wire(jpeg_bytes); }

StreamPart encode_part(const Frame& frame, int quality) {
    StreamPart p;
    p.jpeg_bytes = encode_jpeg(frame, quality);
    p.content_length = p.jpeg_bytes.size();
    return p;
}

}  // namespace firesight
