#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splatcamo/common.hpp"
#include "splatcamo/image.hpp"
#include "splatcamo/sh.hpp"

namespace splatcamo {

/// One anisotropic 3D Gaussian primitive.
struct Splat {
  Vec3 mean = Vec3::Zero();
  Vec3 scale = Vec3::Ones();              // per-axis standard deviation, > 0
  Eigen::Vector4d rotation{1, 0, 0, 0};   // unit quaternion, (w, x, y, z)
  double opacity = 1.0;                   // in [0, 1]
  ShColor color;

  void validate() const;

  /// Rotation matrix of the unit quaternion.
  Mat3 rotation_matrix() const;

  /// World-space covariance R * diag(scale^2) * R^T.
  Mat3 covariance() const;
};

/// The scene representation and the attack surface: an ordered set of splats
/// sharing one SH order.
struct SplatCloud {
  std::vector<Splat> splats;
  int sh_order = 0;

  void validate() const;
  size_t size() const { return splats.size(); }
};

struct Intrinsics {
  double focal_px = 0.0;   // pinhole focal length, pixels
  double cx = 0.0, cy = 0.0;  // principal point, pixels
  int width = 0, height = 0;
};

/// Camera extrinsics + pinhole intrinsics. Coordinates are right-handed with
/// +y up; `forward` is the viewing direction (the optical axis used for
/// viewpoint-region membership), `up` is orthogonal to it. Screen x grows
/// right, screen y grows down.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Vec3 forward = Vec3(0, 0, -1);
  Vec3 up = Vec3(0, 1, 0);
  Intrinsics intrinsics;

  void validate() const;

  Vec3 right() const { return forward.cross(up); }

  /// Rows are (right, up, forward): world direction -> camera coordinates.
  Mat3 world_to_camera() const;

  /// Positions the camera at `eye` looking at `target` with a +y-up
  /// preference (falls back to +z reference when the view is vertical).
  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Intrinsics& intr);

  bool same_extrinsics(const CameraPose& other) const {
    return position == other.position && forward == other.forward && up == other.up;
  }
};

/// Minimum camera-space depth; anything nearer counts as behind the camera.
inline constexpr double kNearPlane = 1e-4;

struct ProjectedPoint {
  double x = 0.0;  // pixel coordinates
  double y = 0.0;
  double depth = 0.0;  // signed distance along the forward axis
};

/// Pinhole projection. Throws if the point is not strictly in front of the
/// camera (depth <= kNearPlane).
ProjectedPoint project_point(const CameraPose& pose, const Vec3& p);

struct Box2D {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;

  double x1() const { return x + w; }
  double y1() const { return y + h; }
  double area() const { return w * h; }
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

/// Tight 2D bounds of the projected box corners, clipped to the image.
/// Empty when the box is fully behind the camera or projects outside.
std::optional<Box2D> object_bbox(const CameraPose& pose, const Aabb& aabb);

enum class DatasetRole { kBenign, kPoisoned };

struct PosedImage {
  Image image;
  CameraPose pose;
  std::string name;  // view file name used by manifests and detections
};

/// The training dataset: ordered (image, pose) pairs plus a role tag saying
/// whether the images have been tampered with.
struct PosedImageSet {
  std::vector<PosedImage> entries;
  DatasetRole role = DatasetRole::kBenign;

  void add(Image image, const CameraPose& pose, std::string name = {});
  size_t size() const { return entries.size(); }
};

// --- splat-cloud container format -----------------------------------------
//
// Self-describing binary: 8-byte magic "SPLATCLD", u32 version, u32 sh_order,
// u64 splat count, then fixed-width little-endian records of doubles
// (mean[3], scale[3], quaternion wxyz[4], opacity, coeffs[3*(l+1)^2]).
// Raw doubles make round trips bit-exact.

void save_cloud(const SplatCloud& cloud, const std::string& path);
SplatCloud load_cloud(const std::string& path);

/// Human-readable dump of the same records, one splat per line.
void save_cloud_text(const SplatCloud& cloud, const std::string& path);

}  // namespace splatcamo
