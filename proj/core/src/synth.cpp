#include "splatcamo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace splatcamo {

namespace {

uint64_t hash_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double hash01(uint64_t a, uint64_t b, uint64_t salt) {
  const uint64_t h = hash_mix(hash_mix(a * 0x9e3779b97f4a7c15ull ^ b) ^ salt);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fract(double v) { return v - std::floor(v); }

}  // namespace

TexturePalette default_palette() {
  TexturePalette p;
  p["car-blue"] = {Texture::Kind::kSolid, {0.10, 0.20, 0.80}, {0.10, 0.20, 0.80}, 1.0};
  p["car-red"] = {Texture::Kind::kSolid, {0.80, 0.12, 0.10}, {0.80, 0.12, 0.10}, 1.0};
  p["car-gray"] = {Texture::Kind::kSolid, {0.55, 0.55, 0.58}, {0.55, 0.55, 0.58}, 1.0};
  // Mid-gray asphalt with a yellow lane stripe.
  p["road"] = {Texture::Kind::kStripes, {0.42, 0.42, 0.42}, {0.75, 0.65, 0.15}, 1.0};
  // Speckled green.
  p["grass"] = {Texture::Kind::kNoise, {0.15, 0.52, 0.15}, {0.10, 0.38, 0.12}, 12.0};
  // Darker, slightly brown ground distinct from the "road" signature.
  p["pavement"] = {Texture::Kind::kNoise, {0.28, 0.26, 0.24}, {0.22, 0.21, 0.20}, 16.0};
  // Red disc on a light backing.
  p["stop-sign"] = {Texture::Kind::kDisc, {0.75, 0.08, 0.08}, {0.85, 0.85, 0.82}, 0.42};
  // White face on a dark backing.
  p["clock"] = {Texture::Kind::kDisc, {0.92, 0.92, 0.88}, {0.25, 0.18, 0.12}, 0.42};
  // Black/white panels.
  p["soccer"] = {Texture::Kind::kChecker, {0.92, 0.92, 0.92}, {0.08, 0.08, 0.08}, 3.0};
  return p;
}

Vec3 sample_texture(const Texture& tex, const Vec2& uv, uint64_t salt) {
  switch (tex.kind) {
    case Texture::Kind::kSolid:
      return tex.color_a;
    case Texture::Kind::kStripes: {
      // Thin band of color_b across the middle of each repeat.
      const double band = fract(uv.y() * tex.feature);
      return std::abs(band - 0.5) < 0.08 ? tex.color_b : tex.color_a;
    }
    case Texture::Kind::kNoise: {
      const auto cx = static_cast<int64_t>(std::floor(uv.x() * tex.feature));
      const auto cy = static_cast<int64_t>(std::floor(uv.y() * tex.feature));
      const double t = hash01(static_cast<uint64_t>(cx), static_cast<uint64_t>(cy), salt);
      return tex.color_a + t * (tex.color_b - tex.color_a);
    }
    case Texture::Kind::kDisc: {
      const double r = (uv - Vec2(0.5, 0.5)).norm();
      return r <= tex.feature ? tex.color_a : tex.color_b;
    }
    case Texture::Kind::kChecker: {
      const auto cx = static_cast<int64_t>(std::floor(uv.x() * tex.feature));
      const auto cy = static_cast<int64_t>(std::floor(uv.y() * tex.feature));
      return ((cx + cy) & 1) == 0 ? tex.color_a : tex.color_b;
    }
  }
  return tex.color_a;
}

void SceneSpec::validate() const {
  require(density > 0.0, "scene density must be > 0");
  require(target_size.minCoeff() > 0.0, "target object must have a nonzero extent");
  require(ground_extent > 0.0, "ground extent must be > 0");
  const Aabb box = target_aabb();
  const double half = ground_extent / 2.0;
  require(box.min.x() >= -half && box.max.x() <= half && box.min.z() >= -half &&
              box.max.z() <= half,
          "target box must lie inside the ground extent");
  require(palette.count(ground_texture) != 0, "unknown ground texture: " + ground_texture);
}

Aabb SceneSpec::target_aabb() const {
  return Aabb{target_center - target_size / 2.0, target_center + target_size / 2.0};
}

namespace {

struct FacePatch {
  // Face plane parameterized as origin + u_axis * u + v_axis * v, uv in [0,1]^2.
  Vec3 origin;
  Vec3 u_axis;
  Vec3 v_axis;
  Vec3 normal;
};

std::array<FacePatch, kFaceCount> box_faces(const Aabb& box) {
  const Vec3 lo = box.min, hi = box.max, d = hi - lo;
  std::array<FacePatch, kFaceCount> f;
  f[0] = {lo, Vec3(0, 0, d.z()), Vec3(0, d.y(), 0), Vec3(-1, 0, 0)};                  // -x
  f[1] = {Vec3(hi.x(), lo.y(), lo.z()), Vec3(0, 0, d.z()), Vec3(0, d.y(), 0), Vec3(1, 0, 0)};  // +x
  f[2] = {lo, Vec3(d.x(), 0, 0), Vec3(0, 0, d.z()), Vec3(0, -1, 0)};                  // -y
  f[3] = {Vec3(lo.x(), hi.y(), lo.z()), Vec3(d.x(), 0, 0), Vec3(0, 0, d.z()), Vec3(0, 1, 0)};  // +y
  f[4] = {lo, Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0), Vec3(0, 0, -1)};                  // -z
  f[5] = {Vec3(lo.x(), lo.y(), hi.z()), Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0), Vec3(0, 0, 1)};  // +z
  return f;
}

size_t patch_count(double area, double density) {
  return static_cast<size_t>(std::max<long long>(1, std::llround(area * density)));
}

}  // namespace

size_t planned_splat_count(const SceneSpec& spec) {
  spec.validate();
  size_t n = patch_count(spec.ground_extent * spec.ground_extent, spec.density);
  for (const FacePatch& f : box_faces(spec.target_aabb())) {
    n += patch_count(f.u_axis.norm() * f.v_axis.norm(), spec.density);
  }
  return n;
}

SplatCloud build_scene(const SceneSpec& spec, const TextureBinding& binding) {
  spec.validate();
  for (const std::string& id : binding.face_texture) {
    require(spec.palette.count(id) != 0, "unknown texture id: " + id);
  }

  const double spacing = 1.0 / std::sqrt(spec.density);
  SplatCloud cloud;
  cloud.sh_order = spec.sh_order;

  // Geometry first, colors second: the splat layout is a function of
  // (spec, seed) only, never of the binding.
  Rng rng(spec.seed);

  // Ground plane.
  const double half = spec.ground_extent / 2.0;
  const size_t n_ground = patch_count(spec.ground_extent * spec.ground_extent, spec.density);
  const Texture& ground_tex = spec.palette.at(spec.ground_texture);
  for (size_t i = 0; i < n_ground; ++i) {
    Splat s;
    const double u = rng.uniform();
    const double v = rng.uniform();
    s.mean = Vec3(-half + spec.ground_extent * u, 0.0, -half + spec.ground_extent * v);
    s.scale = Vec3(0.9 * spacing, 0.15 * spacing, 0.9 * spacing);
    s.opacity = 0.85;
    const Vec2 uv(u, v);
    s.color = ShColor::constant(spec.sh_order, sample_texture(ground_tex, uv, 0x6713u));
    cloud.splats.push_back(std::move(s));
  }

  // Target box faces.
  const auto faces = box_faces(spec.target_aabb());
  for (int fi = 0; fi < kFaceCount; ++fi) {
    const FacePatch& f = faces[fi];
    const Texture& tex = spec.palette.at(binding.face_texture[fi]);
    const size_t n = patch_count(f.u_axis.norm() * f.v_axis.norm(), spec.density);
    const double face_spacing =
        std::sqrt(f.u_axis.norm() * f.v_axis.norm() / static_cast<double>(n));
    for (size_t i = 0; i < n; ++i) {
      Splat s;
      const double u = rng.uniform();
      const double v = rng.uniform();
      s.mean = f.origin + f.u_axis * u + f.v_axis * v;
      // Pancake aligned with the face: thin along the normal.
      Vec3 sc = Vec3::Constant(0.9 * face_spacing);
      for (int k = 0; k < 3; ++k) {
        if (std::abs(f.normal[k]) > 0.5) sc[k] = 0.12 * face_spacing;
      }
      s.scale = sc;
      s.opacity = 0.92;
      s.color = ShColor::constant(
          spec.sh_order, sample_texture(tex, Vec2(u, v), 0xfaceu + static_cast<uint64_t>(fi)));
      cloud.splats.push_back(std::move(s));
    }
  }

  cloud.validate();
  return cloud;
}

void CaptureSpec::validate() const {
  require(view_count >= 1, "capture view count must be >= 1");
  require(radius > 0.0, "capture radius must be > 0");
  require(arc_span_deg > 0.0 && arc_span_deg <= 360.0, "arc span must be in (0, 360]");
  require(width >= 1 && height >= 1, "capture image dimensions must be >= 1");
  require(focal_px > 0.0, "capture focal length must be > 0");
}

Intrinsics CaptureSpec::intrinsics() const {
  return Intrinsics{focal_px, width / 2.0, height / 2.0, width, height};
}

std::vector<CameraPose> make_views(const CaptureSpec& spec) {
  spec.validate();
  std::vector<CameraPose> poses;
  poses.reserve(spec.view_count);
  const Intrinsics intr = spec.intrinsics();

  switch (spec.layout) {
    case CaptureLayout::kHemisphere: {
      const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < spec.view_count; ++i) {
        const double sin_elev = (i + 0.5) / spec.view_count;  // (0, 1]: strictly above horizon
        const double horiz = std::sqrt(std::max(0.0, 1.0 - sin_elev * sin_elev));
        const double az = golden_angle * i;
        const Vec3 dir(horiz * std::cos(az), sin_elev, horiz * std::sin(az));
        poses.push_back(CameraPose::look_at(spec.look_at + spec.radius * dir, spec.look_at, intr));
      }
      break;
    }
    case CaptureLayout::kArc: {
      for (int i = 0; i < spec.view_count; ++i) {
        const double az = spec.view_count == 1
                              ? 0.0
                              : deg_to_rad(spec.arc_span_deg) * i / (spec.view_count - 1);
        const Vec3 eye = spec.look_at +
                         Vec3(spec.radius * std::cos(az), spec.altitude, spec.radius * std::sin(az));
        poses.push_back(CameraPose::look_at(eye, spec.look_at, intr));
      }
      break;
    }
    case CaptureLayout::kRing: {
      for (int i = 0; i < spec.view_count; ++i) {
        const double az = 2.0 * kPi * i / spec.view_count;
        const Vec3 eye = spec.look_at +
                         Vec3(spec.radius * std::cos(az), spec.altitude, spec.radius * std::sin(az));
        poses.push_back(CameraPose::look_at(eye, spec.look_at, intr));
      }
      break;
    }
  }
  return poses;
}

std::vector<CameraPose> make_test_views(const CaptureSpec& base, const std::vector<double>& radii,
                                        int count, double min_elevation_deg,
                                        double max_elevation_deg) {
  base.validate();
  require(!radii.empty(), "make_test_views needs at least one radius");
  require(count >= 1, "make_test_views needs count >= 1");
  require(min_elevation_deg >= 0.0 && min_elevation_deg < max_elevation_deg &&
              max_elevation_deg <= 90.0,
          "elevation band must satisfy 0 <= min < max <= 90");

  std::vector<CameraPose> poses;
  poses.reserve(count);
  const Intrinsics intr = base.intrinsics();
  Rng rng(base.seed ^ 0x7e57u);
  const double min_sin = std::sin(deg_to_rad(min_elevation_deg));
  const double max_sin = std::sin(deg_to_rad(max_elevation_deg));
  for (int i = 0; i < count; ++i) {
    const double radius = radii[i % radii.size()];
    const double sin_elev = rng.uniform(min_sin, max_sin);
    const double horiz = std::sqrt(std::max(0.0, 1.0 - sin_elev * sin_elev));
    const double az = rng.uniform(0.0, 2.0 * kPi);
    const Vec3 dir(horiz * std::cos(az), sin_elev, horiz * std::sin(az));
    poses.push_back(CameraPose::look_at(base.look_at + radius * dir, base.look_at, intr));
  }
  return poses;
}

nlohmann::json pose_to_json(const CameraPose& pose) {
  return nlohmann::json{
      {"position", {pose.position.x(), pose.position.y(), pose.position.z()}},
      {"forward", {pose.forward.x(), pose.forward.y(), pose.forward.z()}},
      {"up", {pose.up.x(), pose.up.y(), pose.up.z()}},
      {"focal_px", pose.intrinsics.focal_px},
      {"width", pose.intrinsics.width},
      {"height", pose.intrinsics.height},
  };
}

CameraPose pose_from_json(const nlohmann::json& j) {
  CameraPose pose;
  for (int k = 0; k < 3; ++k) {
    pose.position[k] = j.at("position").at(k).get<double>();
    pose.forward[k] = j.at("forward").at(k).get<double>();
    pose.up[k] = j.at("up").at(k).get<double>();
  }
  pose.intrinsics.focal_px = j.at("focal_px").get<double>();
  pose.intrinsics.width = j.at("width").get<int>();
  pose.intrinsics.height = j.at("height").get<int>();
  pose.intrinsics.cx = pose.intrinsics.width / 2.0;
  pose.intrinsics.cy = pose.intrinsics.height / 2.0;
  pose.validate();
  return pose;
}

void save_camera_manifest(const std::vector<ManifestView>& views, const std::string& path,
                          const nlohmann::json& extra) {
  nlohmann::json doc = extra;
  doc["views"] = nlohmann::json::array();
  for (const ManifestView& v : views) {
    nlohmann::json jv = pose_to_json(v.pose);
    jv["file"] = v.file;
    doc["views"].push_back(std::move(jv));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

std::vector<ManifestView> load_camera_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("camera manifest parse error in " + path + ": " + e.what());
  }
  std::vector<ManifestView> views;
  for (const auto& jv : doc.at("views")) {
    views.push_back(ManifestView{jv.at("file").get<std::string>(), pose_from_json(jv)});
  }
  return views;
}

}  // namespace splatcamo
