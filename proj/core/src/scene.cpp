#include "splatcamo/scene.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace splatcamo {

void Splat::validate() const {
  require(scale.minCoeff() > 0.0, "splat scale components must be > 0");
  require(std::abs(rotation.norm() - 1.0) <= 1e-9, "splat rotation must be a unit quaternion");
  require(opacity >= 0.0 && opacity <= 1.0, "splat opacity must be in [0, 1]");
  color.validate();
}

Mat3 Splat::rotation_matrix() const {
  const double w = rotation[0], x = rotation[1], y = rotation[2], z = rotation[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 Splat::covariance() const {
  const Mat3 r = rotation_matrix();
  return r * scale.cwiseProduct(scale).asDiagonal() * r.transpose();
}

void SplatCloud::validate() const {
  require(!splats.empty(), "splat cloud must be nonempty");
  for (const Splat& s : splats) {
    s.validate();
    require(s.color.order == sh_order, "every splat color order must equal the cloud sh_order");
  }
}

void CameraPose::validate() const {
  require(std::abs(forward.norm() - 1.0) <= 1e-9, "camera forward must be unit-norm");
  require(std::abs(up.norm() - 1.0) <= 1e-9, "camera up must be unit-norm");
  require(std::abs(forward.dot(up)) <= 1e-9, "camera up must be orthogonal to forward");
  require(intrinsics.width >= 1 && intrinsics.height >= 1, "image dimensions must be >= 1");
  require(intrinsics.focal_px > 0.0, "focal length must be positive");
}

Mat3 CameraPose::world_to_camera() const {
  Mat3 m;
  m.row(0) = right().transpose();
  m.row(1) = up.transpose();
  m.row(2) = forward.transpose();
  return m;
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Intrinsics& intr) {
  CameraPose pose;
  pose.position = eye;
  const Vec3 to_target = target - eye;
  require(to_target.norm() > 0.0, "look_at eye and target coincide");
  pose.forward = to_target.normalized();
  Vec3 ref = Vec3(0, 1, 0);
  if (std::abs(pose.forward.dot(ref)) > 1.0 - 1e-9) ref = Vec3(0, 0, 1);
  pose.up = (ref - pose.forward * pose.forward.dot(ref)).normalized();
  pose.intrinsics = intr;
  pose.validate();
  return pose;
}

ProjectedPoint project_point(const CameraPose& pose, const Vec3& p) {
  const Vec3 t = pose.world_to_camera() * (p - pose.position);
  if (t.z() <= kNearPlane) {
    throw std::invalid_argument("project_point: point is behind the camera (depth " +
                                std::to_string(t.z()) + ")");
  }
  ProjectedPoint out;
  out.x = pose.intrinsics.cx + pose.intrinsics.focal_px * t.x() / t.z();
  out.y = pose.intrinsics.cy - pose.intrinsics.focal_px * t.y() / t.z();
  out.depth = t.z();
  return out;
}

std::optional<Box2D> object_bbox(const CameraPose& pose, const Aabb& aabb) {
  require(aabb.max.x() >= aabb.min.x() && aabb.max.y() >= aabb.min.y() &&
              aabb.max.z() >= aabb.min.z(),
          "object_bbox: empty aabb");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  int in_front = 0;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 p((corner & 1) ? aabb.max.x() : aabb.min.x(),
                 (corner & 2) ? aabb.max.y() : aabb.min.y(),
                 (corner & 4) ? aabb.max.z() : aabb.min.z());
    const Vec3 t = pose.world_to_camera() * (p - pose.position);
    if (t.z() <= kNearPlane) continue;
    ++in_front;
    const double px = pose.intrinsics.cx + pose.intrinsics.focal_px * t.x() / t.z();
    const double py = pose.intrinsics.cy - pose.intrinsics.focal_px * t.y() / t.z();
    x0 = std::min(x0, px);
    y0 = std::min(y0, py);
    x1 = std::max(x1, px);
    y1 = std::max(y1, py);
  }
  if (in_front == 0) return std::nullopt;

  x0 = std::max(x0, 0.0);
  y0 = std::max(y0, 0.0);
  x1 = std::min(x1, static_cast<double>(pose.intrinsics.width));
  y1 = std::min(y1, static_cast<double>(pose.intrinsics.height));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Box2D{x0, y0, x1 - x0, y1 - y0};
}

void PosedImageSet::add(Image image, const CameraPose& pose, std::string name) {
  require(image.width() == pose.intrinsics.width && image.height() == pose.intrinsics.height,
          "posed image dimensions must match the pose intrinsics");
  entries.push_back(PosedImage{std::move(image), pose, std::move(name)});
}

namespace {

constexpr char kCloudMagic[8] = {'S', 'P', 'L', 'A', 'T', 'C', 'L', 'D'};
constexpr uint32_t kCloudVersion = 1;

size_t record_doubles(int sh_order) {
  return 3 + 3 + 4 + 1 + 3 * static_cast<size_t>(sh_coeff_count(sh_order));
}

}  // namespace

void save_cloud(const SplatCloud& cloud, const std::string& path) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  out.write(kCloudMagic, sizeof(kCloudMagic));
  const uint32_t version = kCloudVersion;
  const uint32_t order = static_cast<uint32_t>(cloud.sh_order);
  const uint64_t count = cloud.splats.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&order), sizeof(order));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));

  std::vector<double> rec(record_doubles(cloud.sh_order));
  for (const Splat& s : cloud.splats) {
    size_t i = 0;
    for (int k = 0; k < 3; ++k) rec[i++] = s.mean[k];
    for (int k = 0; k < 3; ++k) rec[i++] = s.scale[k];
    for (int k = 0; k < 4; ++k) rec[i++] = s.rotation[k];
    rec[i++] = s.opacity;
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 0; k < s.color.coeffs.cols(); ++k) rec[i++] = s.color.coeffs(ch, k);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SplatCloud load_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCloudMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("splat cloud parse error: bad magic in " + path);
  }
  uint32_t version = 0, order = 0;
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&order), sizeof(order));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw std::runtime_error("splat cloud parse error: truncated header in " + path);
  if (version != kCloudVersion) {
    throw std::runtime_error("splat cloud parse error: unsupported version " +
                             std::to_string(version));
  }
  if (order > static_cast<uint32_t>(kMaxShOrder)) {
    throw std::runtime_error("splat cloud parse error: sh_order " + std::to_string(order) +
                             " out of range");
  }

  SplatCloud cloud;
  cloud.sh_order = static_cast<int>(order);
  cloud.splats.reserve(count);
  const int coeffs_per_channel = sh_coeff_count(cloud.sh_order);
  std::vector<double> rec(record_doubles(cloud.sh_order));
  for (uint64_t n = 0; n < count; ++n) {
    in.read(reinterpret_cast<char*>(rec.data()),
            static_cast<std::streamsize>(rec.size() * sizeof(double)));
    if (!in) {
      throw std::runtime_error("splat cloud parse error at splat index " + std::to_string(n) +
                               " in " + path);
    }
    Splat s;
    size_t i = 0;
    for (int k = 0; k < 3; ++k) s.mean[k] = rec[i++];
    for (int k = 0; k < 3; ++k) s.scale[k] = rec[i++];
    for (int k = 0; k < 4; ++k) s.rotation[k] = rec[i++];
    s.opacity = rec[i++];
    s.color.order = cloud.sh_order;
    s.color.coeffs.resize(3, coeffs_per_channel);
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 0; k < coeffs_per_channel; ++k) s.color.coeffs(ch, k) = rec[i++];
    cloud.splats.push_back(std::move(s));
  }
  try {
    cloud.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("splat cloud parse error: invalid record in " + path + ": " +
                             e.what());
  }
  return cloud;
}

void save_cloud_text(const SplatCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# splat cloud, sh_order=" << cloud.sh_order << ", count=" << cloud.splats.size()
      << "\n";
  out.precision(17);
  for (size_t n = 0; n < cloud.splats.size(); ++n) {
    const Splat& s = cloud.splats[n];
    out << n << " mean " << s.mean.transpose() << " scale " << s.scale.transpose() << " quat "
        << s.rotation.transpose() << " opacity " << s.opacity << " coeffs";
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 0; k < s.color.coeffs.cols(); ++k) out << ' ' << s.color.coeffs(ch, k);
    out << "\n";
  }
}

}  // namespace splatcamo
