#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "firesight/frame.hpp"

namespace firesight {

/// Camera-frame point in meters: +x right, +y down, +z forward.
struct Point3 {
    double x = 0, y = 0, z = 0;
    friend bool operator==(const Point3&, const Point3&) = default;
};

struct PixelCoord {
    double u = 0, v = 0;
};

/// Pinhole back-projection of pixel (u, v) at depth_mm. Throws InvalidDepth
/// for depth 0 and OutOfImage for pixels outside the intrinsics' image.
Point3 deproject(std::int64_t u, std::int64_t v, std::uint32_t depth_mm, const CameraIntrinsics& k);

/// Continuous pinhole projection, not clamped to the image. Throws
/// NonPositiveZ when p.z <= 0.
PixelCoord project(const Point3& p, const CameraIntrinsics& k);

/// Deprojects every stride-th pixel along both axes in row-major order,
/// skipping zero depths.
std::vector<Point3> depth_frame_to_points(const Frame& frame, const CameraIntrinsics& k, std::uint32_t stride);

/// JSON array of [x, y, z] triples.
nlohmann::json points_to_json(const std::vector<Point3>& points);

/// RealSense-class defaults scaled to the image size.
CameraIntrinsics default_intrinsics(std::uint32_t width, std::uint32_t height);

}  // namespace firesight
