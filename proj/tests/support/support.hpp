#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "firesight/frame.hpp"
#include "firesight/perception.hpp"
#include "firesight/scene_script.hpp"
#include "firesight/tracking.hpp"

namespace fst {

// Removes itself on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::string& path() const { return path_; }
    std::string operator/(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
std::vector<std::string> files_under(const std::string& root);  // relative, generic separators, sorted

firesight::Frame filled_frame(std::uint32_t w, std::uint32_t h, firesight::PixelFormat fmt, std::uint8_t byte,
                              std::uint32_t frame_id = 0);
firesight::Frame random_frame(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, firesight::PixelFormat fmt,
                              std::uint32_t frame_id = 0);
firesight::BBox random_box(std::mt19937_64& rng, int w, int h);

firesight::ScriptedActor moving_actor(firesight::ClassLabel label, double conf, firesight::BBox start, int dx, int dy,
                                      std::uint32_t frames, std::optional<std::int32_t> inset = std::nullopt);
firesight::ScriptedActor still_actor(firesight::ClassLabel label, double conf, firesight::BBox box,
                                     std::uint32_t frames);

firesight::Track make_track(std::uint64_t id, firesight::ClassLabel label, firesight::BBox box, double conf,
                            firesight::TrackState state = firesight::TrackState::Confirmed);

// Pixel-counting IoU over the union's bounding rectangle.
double pixel_iou(const firesight::BBox& a, const firesight::BBox& b);
// Literal greedy rule with pixel IoU: repeatedly take the best remaining pair.
firesight::Association oracle_associate(const std::vector<firesight::Track>& tracks,
                                        const std::vector<firesight::Detection>& dets, double thr);

// --- Minimal HTTP/1.1 client over a raw socket, independent of the server's
// library. Requests are sent with "Connection: close".

struct HttpResponse {
    int status = 0;
    std::map<std::string, std::string> headers;  // lower-cased names
    std::string body;
};

HttpResponse http_get(int port, const std::string& target, int timeout_ms = 5000);
nlohmann::json get_json(int port, const std::string& target, int expect_status = 200);

// Streaming GET: headers are parsed eagerly, body bytes are read on demand.
class HttpStream {
public:
    HttpStream(int port, const std::string& target, int recv_buffer = 0);
    ~HttpStream();
    HttpStream(const HttpStream&) = delete;
    HttpStream& operator=(const HttpStream&) = delete;

    int status() const { return status_; }
    std::string header(const std::string& lower_name) const;
    // Appends available bytes; false on EOF/timeout with nothing read.
    bool read_some(std::string& out, int timeout_ms);
    void close();

private:
    int fd_ = -1;
    int status_ = 0;
    std::map<std::string, std::string> headers_;
    std::string pending_;
};

// Strict multipart/x-mixed-replace parser. Any deviation from
//   "--<b>\r\n" headers "\r\n" body(Content-Length) "\r\n"
// counts as a framing error and the parser stops.
class MultipartParser {
public:
    explicit MultipartParser(std::string boundary) : boundary_(std::move(boundary)) {}

    struct Part {
        std::map<std::string, std::string> headers;
        std::string body;
    };

    void feed(const std::string& bytes);
    std::vector<Part>& parts() { return parts_; }
    int framing_errors() const { return errors_; }
    const std::string& last_error() const { return error_text_; }

private:
    void parse();
    std::string boundary_;
    std::string buf_;
    std::vector<Part> parts_;
    int errors_ = 0;
    std::string error_text_;
};

// Reads MJPEG parts until `count` parts or the deadline.
std::vector<MultipartParser::Part> read_parts(HttpStream& s, MultipartParser& parser, std::size_t count,
                                              std::chrono::milliseconds deadline);

struct SseEvent {
    std::string event;
    std::string data;
};
// Splits complete events off the front of `buf`.
std::vector<SseEvent> take_sse_events(std::string& buf);

// Deterministic inputs for the committed overlay golden frames: name -> output.
std::vector<std::pair<std::string, firesight::Frame>> golden_scenes();

// JPEG structural checks used by stream tests.
bool jpeg_well_formed(const std::string& bytes);

}  // namespace fst
