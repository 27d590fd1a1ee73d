#include "firesight/perception.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include "firesight/scene_script.hpp"

namespace firesight {

namespace {

constexpr std::array<std::string_view, kClassCount> kLabelNames = {
    "firefighter", "civilian", "door", "window", "ladder", "fire", "prone_person",
};

}  // namespace

std::string_view label_name(ClassLabel l) noexcept {
    return kLabelNames[static_cast<std::size_t>(l)];
}

std::optional<ClassLabel> parse_label(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kClassCount; ++i) {
        if (kLabelNames[i] == name) return static_cast<ClassLabel>(i);
    }
    return std::nullopt;
}

double iou(const BBox& a, const BBox& b) noexcept {
    const std::int64_t ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const std::int64_t iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const std::int64_t inter = ix * iy;
    if (inter == 0) return 0.0;
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

MaskRle encode_mask(const std::vector<std::uint8_t>& bits) {
    MaskRle rle;
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (const auto b : bits) {
        const std::uint8_t v = b ? 1 : 0;
        if (v != current) {
            rle.runs.push_back(run);
            run = 0;
            current = v;
        }
        ++run;
    }
    rle.runs.push_back(run);
    return rle;
}

std::vector<std::uint8_t> decode_mask(const MaskRle& rle, const BBox& box) {
    if (!box.well_formed()) fail(Errc::MalformedMask, "mask box is empty");
    const auto area = static_cast<std::uint64_t>(box.area());
    std::uint64_t total = 0;
    for (const auto r : rle.runs) total += r;
    if (total != area) {
        fail(Errc::MalformedMask, "mask runs sum to " + std::to_string(total) + ", box area is " +
                                      std::to_string(area));
    }
    std::vector<std::uint8_t> bits;
    bits.reserve(area);
    std::uint8_t v = 0;
    for (const auto r : rle.runs) {
        bits.insert(bits.end(), r, v);
        v ^= 1;
    }
    return bits;
}

void validate_detection(const Detection& d, std::uint32_t frame_w, std::uint32_t frame_h) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        fail(Errc::InvalidArgument, "confidence " + std::to_string(d.confidence) + " outside [0,1]");
    }
    if (!d.box.inside(frame_w, frame_h)) {
        fail(Errc::BoxOutOfBounds, "box [" + std::to_string(d.box.x0) + "," + std::to_string(d.box.y0) + "," +
                                       std::to_string(d.box.x1) + "," + std::to_string(d.box.y1) +
                                       "] outside " + std::to_string(frame_w) + "x" +
                                       std::to_string(frame_h));
    }
    if (d.mask) decode_mask(*d.mask, d.box);
}

bool detection_order(const Detection& a, const Detection& b) noexcept {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.label != b.label) return label_code(a.label) < label_code(b.label);
    if (a.box.x0 != b.box.x0) return a.box.x0 < b.box.x0;
    return a.box.y0 < b.box.y0;
}

void sort_detections(std::vector<Detection>& dets) {
    std::stable_sort(dets.begin(), dets.end(), detection_order);
}

std::vector<Detection> filter_by_confidence(const std::vector<Detection>& dets, double threshold) {
    std::vector<Detection> out;
    std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
                 [threshold](const Detection& d) { return d.confidence >= threshold; });
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return k.label == d.label && iou(k.box, d.box) > iou_threshold;
        });
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

nlohmann::json detection_to_json(const Detection& d) {
    nlohmann::json j = {
        {"label", label_name(d.label)},
        {"confidence", d.confidence},
        {"box", {d.box.x0, d.box.y0, d.box.x1, d.box.y1}},
    };
    if (d.mask) j["mask_rle"] = d.mask->runs;
    return j;
}

Detection detection_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(Errc::InvalidArgument, "detection must be a JSON object");
    Detection d;
    const auto label = j.value("label", std::string{});
    const auto parsed = parse_label(label);
    if (!parsed) fail(Errc::InvalidArgument, "unknown class '" + label + "'");
    d.label = *parsed;
    if (!j.contains("confidence") || !j["confidence"].is_number()) {
        fail(Errc::InvalidArgument, "detection confidence missing");
    }
    d.confidence = j["confidence"].get<double>();
    const auto& box = j.value("box", nlohmann::json::array());
    if (!box.is_array() || box.size() != 4) fail(Errc::InvalidArgument, "box must be [x0,y0,x1,y1]");
    for (const auto& v : box) {
        if (!v.is_number_integer()) fail(Errc::InvalidArgument, "box coordinates must be integers");
    }
    d.box = {box[0].get<std::int32_t>(), box[1].get<std::int32_t>(), box[2].get<std::int32_t>(),
             box[3].get<std::int32_t>()};
    if (j.contains("mask_rle") && !j["mask_rle"].is_null()) {
        const auto& runs = j["mask_rle"];
        if (!runs.is_array()) fail(Errc::InvalidArgument, "mask_rle must be an array");
        MaskRle rle;
        for (const auto& r : runs) {
            if (!r.is_number_unsigned() && !(r.is_number_integer() && r.get<std::int64_t>() >= 0)) {
                fail(Errc::InvalidArgument, "mask_rle entries must be non-negative integers");
            }
            rle.runs.push_back(r.get<std::uint32_t>());
        }
        d.mask = std::move(rle);
    }
    return d;
}

std::vector<Detection> detect(DetectorBackend& backend, const Frame& frame) {
    validate_frame(frame);
    std::vector<Detection> dets;
    try {
        dets = backend.infer(frame);
        for (const auto& d : dets) validate_detection(d, frame.width, frame.height);
    } catch (const Error& e) {
        if (e.code() == Errc::BackendFailure) throw;
        fail(Errc::BackendFailure, backend.name() + ": " + e.what());
    } catch (const std::exception& e) {
        fail(Errc::BackendFailure, backend.name() + ": " + e.what());
    }
    sort_detections(dets);
    return dets;
}

// --- ScriptedBackend --------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::shared_ptr<const SceneScript> script)
    : script_(std::move(script)) {
    if (!script_) fail(Errc::InvalidArgument, "scripted backend needs a scene script");
}

bool ScriptedBackend::produces_masks() const { return script_->has_masks(); }

std::vector<Detection> ScriptedBackend::infer(const Frame& frame) {
    return script_->at(frame.frame_id);
}

// --- ExternalBackend --------------------------------------------------------

namespace {

bool send_all(int fd, const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        const auto w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) return false;
        p += w;
        n -= static_cast<std::size_t>(w);
    }
    return true;
}

bool recv_all(int fd, std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        const auto r = ::recv(fd, p, n, 0);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) return false;
        p += r;
        n -= static_cast<std::size_t>(r);
    }
    return true;
}

constexpr std::uint32_t kMaxReplyBytes = 64u << 20;

}  // namespace

ExternalBackend::ExternalBackend(std::string host, std::uint16_t port, int timeout_ms)
    : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {}

ExternalBackend::~ExternalBackend() { disconnect(); }

void ExternalBackend::disconnect() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void ExternalBackend::connect_if_needed() {
    if (fd_ >= 0) return;
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto port = std::to_string(port_);
    if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
        fail(Errc::BackendFailure, "cannot resolve " + host_);
    }
    int fd = -1;
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) fail(Errc::BackendFailure, "cannot connect to " + host_ + ":" + port);
    timeval tv{};
    tv.tv_sec = timeout_ms_ / 1000;
    tv.tv_usec = (timeout_ms_ % 1000) * 1000;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    fd_ = fd;
}

std::vector<Detection> ExternalBackend::infer(const Frame& frame) {
    connect_if_needed();
    const auto payload = encode_fgf(frame);
    std::uint8_t len[4];
    for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(payload.size() >> (8 * i));
    if (!send_all(fd_, len, 4) || !send_all(fd_, payload.data(), payload.size())) {
        disconnect();
        fail(Errc::BackendFailure, name() + ": send failed");
    }
    if (!recv_all(fd_, len, 4)) {
        disconnect();
        fail(Errc::BackendFailure, name() + ": no reply");
    }
    const std::uint32_t n = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
    if (n > kMaxReplyBytes) {
        disconnect();
        fail(Errc::BackendFailure, name() + ": reply too large");
    }
    std::string body(n, '\0');
    if (!recv_all(fd_, reinterpret_cast<std::uint8_t*>(body.data()), n)) {
        disconnect();
        fail(Errc::BackendFailure, name() + ": truncated reply");
    }
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        fail(Errc::BackendFailure, name() + ": reply is not a JSON array");
    }
    std::vector<Detection> out;
    out.reserve(doc.size());
    for (const auto& j : doc) out.push_back(detection_from_json(j));
    return out;
}

// --- FaultInjectingBackend ---------------------------------------------------

FaultInjectingBackend::FaultInjectingBackend(std::unique_ptr<DetectorBackend> inner, std::uint32_t every,
                                             double rate, std::uint64_t seed)
    : inner_(std::move(inner)), every_(every), rate_(rate), rng_(seed) {}

std::vector<Detection> FaultInjectingBackend::infer(const Frame& frame) {
    ++calls_;
    const bool periodic = every_ > 0 && calls_ % every_ == 0;
    const bool random = rate_ > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < rate_;
    if (periodic || random) {
        fail(Errc::BackendFailure, "injected fault on frame " + std::to_string(frame.frame_id));
    }
    return inner_->infer(frame);
}

}  // namespace firesight
