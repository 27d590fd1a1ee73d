#include "support.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "firesight/overlay.hpp"

namespace fs = std::filesystem;
using namespace firesight;

namespace fst {

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "firesight-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> files_under(const std::string& root) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Frame filled_frame(std::uint32_t w, std::uint32_t h, PixelFormat fmt, std::uint8_t byte, std::uint32_t frame_id) {
    Frame f = make_frame(w, h, fmt, frame_id, frame_id * 33333ull, "test");
    std::fill(f.data.begin(), f.data.end(), byte);
    return f;
}

Frame random_frame(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, PixelFormat fmt, std::uint32_t frame_id) {
    Frame f = make_frame(w, h, fmt, frame_id, frame_id * 33333ull, "test");
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& b : f.data) b = static_cast<std::uint8_t>(byte(rng));
    return f;
}

BBox random_box(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
    const int x0 = xs(rng), y0 = ys(rng);
    std::uniform_int_distribution<int> ws(1, w - x0), hs(1, h - y0);
    return {x0, y0, x0 + ws(rng), y0 + hs(rng)};
}

ScriptedActor moving_actor(ClassLabel label, double conf, BBox start, int dx, int dy, std::uint32_t frames,
                           std::optional<std::int32_t> inset) {
    ScriptedActor a;
    a.label = label;
    a.confidence = conf;
    a.mask_inset = inset;
    const int n = static_cast<int>(frames) - 1;
    a.keyframes.push_back({0, start});
    a.keyframes.push_back(
        {frames - 1, {start.x0 + dx * n, start.y0 + dy * n, start.x1 + dx * n, start.y1 + dy * n}});
    return a;
}

ScriptedActor still_actor(ClassLabel label, double conf, BBox box, std::uint32_t frames) {
    return moving_actor(label, conf, box, 0, 0, frames);
}

Track make_track(std::uint64_t id, ClassLabel label, BBox box, double conf, TrackState state) {
    Track t;
    t.track_id = id;
    t.label = label;
    t.box = box;
    t.confidence = conf;
    t.state = state;
    t.hits = state == TrackState::Lost ? 0 : 3;
    t.misses = state == TrackState::Lost ? 1 : 0;
    return t;
}

// --- HTTP -----------------------------------------------------------------------

namespace {

int connect_local(int port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw std::runtime_error("connect to port " + std::to_string(port) + " failed");
    }
    return fd;
}

void send_all(int fd, const std::string& s) {
    std::size_t off = 0;
    while (off < s.size()) {
        const auto n = ::send(fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
        if (n <= 0) throw std::runtime_error("send failed");
        off += static_cast<std::size_t>(n);
    }
}

// 1 = data, 0 = EOF, -1 = timeout
int recv_some(int fd, std::string& out, int timeout_ms) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return -1;
    char buf[16384];
    const auto n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) return 0;
    out.append(buf, static_cast<std::size_t>(n));
    return 1;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

void parse_head(const std::string& head, int& status, std::map<std::string, std::string>& headers) {
    std::istringstream ss(head);
    std::string line;
    std::getline(ss, line);
    std::istringstream first(line);
    std::string version;
    first >> version >> status;
    while (std::getline(ss, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
    }
}

std::string request(const std::string& target) {
    return "GET " + target + " HTTP/1.1\r\nHost: 127.0.0.1\r\nConnection: close\r\n\r\n";
}

}  // namespace

HttpResponse http_get(int port, const std::string& target, int timeout_ms) {
    const int fd = connect_local(port);
    send_all(fd, request(target));
    std::string raw;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        if (recv_some(fd, raw, 100) == 0) break;
    }
    ::close(fd);
    HttpResponse r;
    const auto split = raw.find("\r\n\r\n");
    if (split == std::string::npos) throw std::runtime_error("no HTTP header in response to " + target);
    parse_head(raw.substr(0, split), r.status, r.headers);
    r.body = raw.substr(split + 4);
    return r;
}

nlohmann::json get_json(int port, const std::string& target, int expect_status) {
    const auto r = http_get(port, target);
    if (r.status != expect_status) {
        throw std::runtime_error(target + ": status " + std::to_string(r.status) + " body " + r.body);
    }
    return nlohmann::json::parse(r.body);
}

HttpStream::HttpStream(int port, const std::string& target, int recv_buffer) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (recv_buffer > 0) ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &recv_buffer, sizeof recv_buffer);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd_);
        throw std::runtime_error("connect failed");
    }
    send_all(fd_, request(target));
    std::string raw;
    std::size_t split;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while ((split = raw.find("\r\n\r\n")) == std::string::npos) {
        if (std::chrono::steady_clock::now() > deadline || recv_some(fd_, raw, 100) == 0) {
            throw std::runtime_error("no response header for " + target);
        }
    }
    parse_head(raw.substr(0, split), status_, headers_);
    pending_ = raw.substr(split + 4);
}

HttpStream::~HttpStream() { close(); }

void HttpStream::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

std::string HttpStream::header(const std::string& name) const {
    const auto it = headers_.find(name);
    return it == headers_.end() ? "" : it->second;
}

bool HttpStream::read_some(std::string& out, int timeout_ms) {
    if (!pending_.empty()) {
        out += pending_;
        pending_.clear();
        return true;
    }
    if (fd_ < 0) return false;
    return recv_some(fd_, out, timeout_ms) == 1;
}

// --- multipart ---------------------------------------------------------------------

void MultipartParser::feed(const std::string& bytes) {
    if (errors_) return;
    buf_ += bytes;
    parse();
}

void MultipartParser::parse() {
    const std::string delim = "--" + boundary_ + "\r\n";
    while (!errors_) {
        if (buf_.size() < delim.size()) return;
        if (buf_.compare(0, delim.size(), delim) != 0) {
            errors_++;
            error_text_ = "expected boundary line";
            return;
        }
        const auto head_end = buf_.find("\r\n\r\n", delim.size());
        if (head_end == std::string::npos) return;
        Part part;
        std::istringstream hs(buf_.substr(delim.size(), head_end + 2 - delim.size()));
        std::string line;
        while (std::getline(hs, line)) {
            if (line.empty() || line.back() != '\r') {
                errors_++;
                error_text_ = "header line not CRLF-terminated";
                return;
            }
            line.pop_back();
            const auto colon = line.find(':');
            if (colon == std::string::npos) {
                errors_++;
                error_text_ = "header without colon";
                return;
            }
            part.headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
        }
        const auto cl = part.headers.find("content-length");
        if (cl == part.headers.end()) {
            errors_++;
            error_text_ = "part without Content-Length";
            return;
        }
        std::size_t len = 0;
        try {
            std::size_t used = 0;
            len = std::stoul(cl->second, &used);
            if (used != cl->second.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            errors_++;
            error_text_ = "bad Content-Length";
            return;
        }
        const auto body_start = head_end + 4;
        if (buf_.size() < body_start + len + 2) return;
        if (buf_.compare(body_start + len, 2, "\r\n") != 0) {
            errors_++;
            error_text_ = "body not followed by CRLF (Content-Length mismatch)";
            return;
        }
        part.body = buf_.substr(body_start, len);
        parts_.push_back(std::move(part));
        buf_.erase(0, body_start + len + 2);
    }
}

std::vector<MultipartParser::Part> read_parts(HttpStream& s, MultipartParser& parser, std::size_t count,
                                              std::chrono::milliseconds deadline) {
    const auto end = std::chrono::steady_clock::now() + deadline;
    while (parser.parts().size() < count && !parser.framing_errors() && std::chrono::steady_clock::now() < end) {
        std::string chunk;
        if (s.read_some(chunk, 100)) parser.feed(chunk);
    }
    return parser.parts();
}

std::vector<SseEvent> take_sse_events(std::string& buf) {
    std::vector<SseEvent> out;
    std::size_t end;
    while ((end = buf.find("\n\n")) != std::string::npos) {
        const std::string block = buf.substr(0, end);
        buf.erase(0, end + 2);
        SseEvent ev;
        std::istringstream ss(block);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.rfind("event: ", 0) == 0) ev.event = line.substr(7);
            else if (line.rfind("data: ", 0) == 0) ev.data += line.substr(6);
        }
        out.push_back(std::move(ev));
    }
    return out;
}

bool jpeg_well_formed(const std::string& b) {
    return b.size() > 4 && static_cast<unsigned char>(b[0]) == 0xFF && static_cast<unsigned char>(b[1]) == 0xD8 &&
           static_cast<unsigned char>(b[b.size() - 2]) == 0xFF && static_cast<unsigned char>(b[b.size() - 1]) == 0xD9;
}

}  // namespace fst

// --- golden scenes -------------------------------------------------------------

namespace fst {

namespace {

Frame gradient_base(std::uint32_t w, std::uint32_t h) {
    Frame f = make_frame(w, h, PixelFormat::Rgb8, 42, 42 * 33333ull, "golden");
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::size_t i = 3 * (static_cast<std::size_t>(y) * w + x);
            f.data[i] = static_cast<std::uint8_t>((x * 255) / (w - 1));
            f.data[i + 1] = static_cast<std::uint8_t>((y * 200) / (h - 1));
            f.data[i + 2] = static_cast<std::uint8_t>(((x + y) * 7) % 256);
        }
    }
    return f;
}

Track with_mask(Track t, std::int32_t inset) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(t.box.area()));
    const int w = t.box.width(), h = t.box.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bits[static_cast<std::size_t>(y) * w + x] = x >= inset && x < w - inset && y >= inset && y < h - inset;
        }
    }
    t.last_mask = encode_mask(bits);
    return t;
}

}  // namespace

std::vector<std::pair<std::string, Frame>> golden_scenes() {
    std::vector<std::pair<std::string, Frame>> out;
    const Frame base = gradient_base(160, 120);
    const std::vector<Track> tracks = {
        make_track(1, ClassLabel::Firefighter, {10, 20, 60, 70}, 0.93),
        make_track(2, ClassLabel::Door, {80, 30, 121, 91}, 0.71, TrackState::Lost),
        make_track(3, ClassLabel::Window, {100, 5, 150, 20}, 0.55, TrackState::Tentative),
        make_track(4, ClassLabel::Fire, {118, 0, 158, 26}, 0.88),
        make_track(9, ClassLabel::PronePerson, {2, 95, 70, 118}, 0.6),
    };
    out.emplace_back("draw_tracks", draw_tracks(base, tracks));

    const std::vector<Track> masked = {
        with_mask(make_track(5, ClassLabel::Civilian, {30, 30, 90, 80}, 0.8), 4),
        with_mask(make_track(3, ClassLabel::Fire, {60, 50, 130, 110}, 0.9), 0),
        make_track(7, ClassLabel::Door, {0, 0, 10, 10}, 0.9),  // no mask: untouched
    };
    out.emplace_back("blend_masks", blend_masks(base, masked, 0.5));
    out.emplace_back("blend_masks_alpha1", blend_masks(base, masked, 1.0));

    Frame depth = make_frame(160, 120, PixelFormat::Depth16, 7, 7 * 33333ull, "golden");
    for (std::uint32_t y = 0; y < 120; ++y) {
        for (std::uint32_t x = 0; x < 160; ++x) {
            const std::uint16_t v = (x % 37 == 0) ? 0 : static_cast<std::uint16_t>(200 + x * 30 + y * 7);
            depth.set_sample16(static_cast<std::size_t>(y) * 160 + x, v);
        }
    }
    out.emplace_back("colormap_depth", colormap_depth(depth, 500, 4500));
    out.emplace_back("depth_processed", draw_tracks(blend_masks(colormap_depth(depth, 500, 4500), masked, 0.5), tracks));
    return out;
}

using firesight::Association;
using firesight::Detection;
using firesight::Track;

double pixel_iou(const firesight::BBox& a, const firesight::BBox& b) {
    long inter = 0, uni = 0;
    for (int y = std::min(a.y0, b.y0); y < std::max(a.y1, b.y1); ++y) {
        for (int x = std::min(a.x0, b.x0); x < std::max(a.x1, b.x1); ++x) {
            const bool ia = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
            const bool ib = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    return double(inter) / double(uni);
}

// Literal greedy rule: repeatedly take the best remaining eligible pair.
firesight::Association oracle_associate(const std::vector<Track>& tracks, const std::vector<Detection>& dets, double thr) {
    Association out;
    std::vector<bool> t_used(tracks.size()), d_used(dets.size());
    for (;;) {
        bool found = false;
        std::size_t bt = 0, bd = 0;
        double best = -1;
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            for (std::size_t d = 0; d < dets.size(); ++d) {
                if (t_used[t] || d_used[d] || tracks[t].label != dets[d].label) continue;
                const double v = pixel_iou(tracks[t].box, dets[d].box);
                if (v < thr) continue;
                const bool better = !found || v > best ||
                                    (v == best && (tracks[t].track_id < tracks[bt].track_id ||
                                                   (tracks[t].track_id == tracks[bt].track_id && d < bd)));
                if (better) {
                    found = true;
                    best = v;
                    bt = t;
                    bd = d;
                }
            }
        }
        if (!found) break;
        t_used[bt] = d_used[bd] = true;
        out.matches.push_back({bt, bd, best});
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        if (!t_used[t]) out.unmatched_tracks.push_back(t);
    }
    for (std::size_t d = 0; d < dets.size(); ++d) {
        if (!d_used[d]) out.unmatched_detections.push_back(d);
    }
    return out;
}

}  // namespace fst
