#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatcamo/scene.hpp"

namespace splatcamo {

/// Procedural RGB field evaluated at face-local UV in [0,1]^2. Patterns are
/// hash-based, so identical (texture, uv, salt) always gives the same color.
struct Texture {
  enum class Kind { kSolid, kStripes, kNoise, kDisc, kChecker };
  Kind kind = Kind::kSolid;
  Vec3 color_a = Vec3(0.5, 0.5, 0.5);  // dominant color
  Vec3 color_b = Vec3(0.5, 0.5, 0.5);  // secondary (stripe/speckle/background)
  double feature = 0.5;  // repeats for stripes/checker, cell size for noise, radius for disc
};

using TexturePalette = std::map<std::string, Texture>;

/// Built-in palette: car-blue, car-red, car-gray, road, grass, pavement,
/// stop-sign, clock, soccer.
TexturePalette default_palette();

Vec3 sample_texture(const Texture& tex, const Vec2& uv, uint64_t salt);

/// Box faces in fixed order: -x, +x, -y, +y, -z, +z.
inline constexpr int kFaceCount = 6;

/// Texture assignment for the six faces of the target object.
struct TextureBinding {
  std::array<std::string, kFaceCount> face_texture;

  static TextureBinding uniform(const std::string& texture_id) {
    TextureBinding b;
    b.face_texture.fill(texture_id);
    return b;
  }
};

/// Procedural desk-scale scene: a textured ground plane plus one axis-aligned
/// re-texturable target box.
struct SceneSpec {
  double ground_extent = 6.0;  // side length of the square ground patch
  std::string ground_texture = "pavement";
  Vec3 target_center = Vec3(0, 0.4, 0);
  Vec3 target_size = Vec3(1.8, 0.8, 0.9);  // full extents
  std::string target_class = "car";
  TexturePalette palette = default_palette();
  double density = 60.0;  // splats per unit area
  uint64_t seed = 0;
  int sh_order = 2;

  void validate() const;
  Aabb target_aabb() const;
};

/// Number of splats build_scene emits for a given spec: one count per surface
/// patch, each max(1, llround(area * density)).
size_t planned_splat_count(const SceneSpec& spec);

/// Deterministic scene construction. Identical (spec, seed) with different
/// texture bindings yields clouds with identical geometry (means, scales,
/// rotations, opacities) differing only in target-face splat colors; this is
/// what makes two-step benign/adversarial rendering structurally consistent.
SplatCloud build_scene(const SceneSpec& spec, const TextureBinding& binding);

enum class CaptureLayout { kHemisphere, kArc, kRing };

/// Camera layout generator configuration. Hemisphere uses `radius` only; arc
/// and ring place cameras on a horizontal circle of `radius` at `altitude`
/// above the look-at point.
struct CaptureSpec {
  CaptureLayout layout = CaptureLayout::kHemisphere;
  int view_count = 200;
  double radius = 4.0;
  double altitude = 1.0;
  double arc_span_deg = 90.0;
  Vec3 look_at = Vec3(0, 0.4, 0);
  uint64_t seed = 0;
  int width = 64;
  int height = 64;
  double focal_px = 80.0;

  void validate() const;
  Intrinsics intrinsics() const;
};

/// Hemisphere: quasi-uniform Fibonacci lattice on the upper hemisphere.
/// Arc: equally spaced azimuths over [0, span], front face at azimuth 0.
/// Ring: full fixed-altitude circle. All poses look at the look-at point.
std::vector<CameraPose> make_views(const CaptureSpec& spec);

/// Held-out evaluation views: `count` seeded random poses with elevation in
/// [min_elevation_deg, max_elevation_deg], cycling through `radii`
/// hemispheres of increasing size. The default band is the overhead region.
std::vector<CameraPose> make_test_views(const CaptureSpec& base, const std::vector<double>& radii,
                                        int count, double min_elevation_deg,
                                        double max_elevation_deg = 90.0);

// --- camera manifest (authoritative JSON schema for the whole artifact) ----
// { "views": [ { "file": str, "position": [x,y,z], "forward": [x,y,z],
//                "up": [x,y,z], "focal_px": f, "width": w, "height": h } ] }

struct ManifestView {
  std::string file;
  CameraPose pose;
};

nlohmann::json pose_to_json(const CameraPose& pose);
CameraPose pose_from_json(const nlohmann::json& j);

void save_camera_manifest(const std::vector<ManifestView>& views, const std::string& path,
                          const nlohmann::json& extra = nlohmann::json::object());
std::vector<ManifestView> load_camera_manifest(const std::string& path);

}  // namespace splatcamo
