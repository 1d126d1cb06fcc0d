#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatcamo/renderer.hpp"
#include "splatcamo/synth.hpp"

namespace splatcamo {

/// One targeted viewpoint region: all camera poses whose optical axis lies
/// within `delta_deg` of the reference pose's optical axis, bound to one
/// adversarial appearance.
struct ViewRegion {
  CameraPose reference;
  double delta_deg = 30.0;
  std::string appearance;
};

struct AttackPlan {
  std::vector<ViewRegion> regions;

  void validate() const;

  /// True when any two regions can admit a common pose (their reference axes
  /// are closer than the sum of the thresholds).
  bool has_overlap() const;
};

/// Angular distance between the optical axes of two poses, in degrees,
/// symmetric, in [0, 180]. Camera positions play no part.
double angular_distance_deg(const CameraPose& a, const CameraPose& b);

/// Index of the first (lowest-index) region containing the pose, or nullopt.
/// Overlaps resolve to the lowest index, matching the piecewise case order.
std::optional<size_t> region_of(const CameraPose& pose, const AttackPlan& plan);

/// Produces the replacement image for a (view index, region index) pair.
using AdversarialProvider = std::function<Image(size_t view_index, size_t region_index)>;

/// Dataset substitution: one pass over the N entries; entry i becomes
/// (provider(i, j), pose_i) when region_of(pose_i) = j and stays bit-identical
/// otherwise. Poses and ordering are never modified; the result is tagged
/// poisoned. The provider is invoked exactly once per replaced view.
PosedImageSet apply_attack(const PosedImageSet& data, const AttackPlan& plan,
                           const AdversarialProvider& provider);

struct PoisonResult {
  PosedImageSet benign;
  PosedImageSet poisoned;
  Aabb target_aabb;
  /// Region membership per view (nullopt = untouched benign view).
  std::vector<std::optional<size_t>> region_by_view;
};

/// Two-step rendering: render the benign scene at every capture pose, then
/// re-render the scene with each region's adversarial texture binding
/// (geometry identical by the build_scene guarantee) at that region's member
/// poses, and assemble the poisoned set with apply_attack. Each region's
/// appearance id names a palette texture applied to every target face.
PoisonResult poison_synthetic(const SceneSpec& scene, const TextureBinding& benign_binding,
                              const AttackPlan& plan, const CaptureSpec& capture,
                              const Vec3& background, const RenderOptions& options = {});

// --- attack plan wire format ------------------------------------------------
// { "regions": [ { "reference": <pose>, "delta_deg": d, "appearance": str } ] }

nlohmann::json plan_to_json(const AttackPlan& plan);
AttackPlan plan_from_json(const nlohmann::json& j);
void save_plan(const AttackPlan& plan, const std::string& path);
AttackPlan load_plan(const std::string& path);

}  // namespace splatcamo
