#include "firesight/depth_geom.hpp"

namespace firesight {

Point3 deproject(std::int64_t u, std::int64_t v, std::uint32_t depth_mm, const CameraIntrinsics& k) {
    if (depth_mm == 0) fail(Errc::InvalidDepth, "depth 0 is invalid");
    if (u < 0 || v < 0 || u >= k.width || v >= k.height) {
        fail(Errc::OutOfImage, "pixel (" + std::to_string(u) + "," + std::to_string(v) + ") outside " +
                                   std::to_string(k.width) + "x" + std::to_string(k.height));
    }
    const double z = depth_mm / 1000.0;
    return {(static_cast<double>(u) - k.cx) * z / k.fx, (static_cast<double>(v) - k.cy) * z / k.fy, z};
}

PixelCoord project(const Point3& p, const CameraIntrinsics& k) {
    if (!(p.z > 0)) fail(Errc::NonPositiveZ, "cannot project a point with z <= 0");
    return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

std::vector<Point3> depth_frame_to_points(const Frame& frame, const CameraIntrinsics& k, std::uint32_t stride) {
    require_format(frame, PixelFormat::Depth16, "depth_frame_to_points");
    if (k.width != frame.width || k.height != frame.height) {
        fail(Errc::IntrinsicsMismatch, "intrinsics are " + std::to_string(k.width) + "x" +
                                           std::to_string(k.height) + ", frame is " +
                                           std::to_string(frame.width) + "x" + std::to_string(frame.height));
    }
    if (stride == 0) fail(Errc::InvalidArgument, "stride must be >= 1");
    std::vector<Point3> out;
    for (std::uint32_t v = 0; v < frame.height; v += stride) {
        for (std::uint32_t u = 0; u < frame.width; u += stride) {
            const auto d = frame.sample16(static_cast<std::size_t>(v) * frame.width + u);
            if (d != 0) out.push_back(deproject(u, v, d, k));
        }
    }
    return out;
}

nlohmann::json points_to_json(const std::vector<Point3>& points) {
    auto arr = nlohmann::json::array();
    for (const auto& p : points) arr.push_back({p.x, p.y, p.z});
    return arr;
}

CameraIntrinsics default_intrinsics(std::uint32_t width, std::uint32_t height) {
    const double f = 615.0 * width / 640.0;
    return {f, f, width / 2.0, height / 2.0, width, height};
}

}  // namespace firesight
