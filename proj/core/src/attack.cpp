#include "splatcamo/attack.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace splatcamo {

void AttackPlan::validate() const {
  require(!regions.empty(), "attack plan needs at least one region");
  std::set<std::string> ids;
  for (const ViewRegion& r : regions) {
    require(r.delta_deg > 0.0 && r.delta_deg <= 180.0,
            "region threshold must be in (0, 180] degrees");
    r.reference.validate();
    require(ids.insert(r.appearance).second,
            "appearance ids must be distinct per region: " + r.appearance);
  }
}

bool AttackPlan::has_overlap() const {
  for (size_t i = 0; i < regions.size(); ++i) {
    for (size_t j = i + 1; j < regions.size(); ++j) {
      if (angular_distance_deg(regions[i].reference, regions[j].reference) <=
          regions[i].delta_deg + regions[j].delta_deg) {
        return true;
      }
    }
  }
  return false;
}

double angular_distance_deg(const CameraPose& a, const CameraPose& b) {
  const double c = std::clamp(a.forward.dot(b.forward), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

std::optional<size_t> region_of(const CameraPose& pose, const AttackPlan& plan) {
  plan.validate();
  for (size_t j = 0; j < plan.regions.size(); ++j) {
    if (angular_distance_deg(pose, plan.regions[j].reference) <= plan.regions[j].delta_deg) {
      return j;
    }
  }
  return std::nullopt;
}

PosedImageSet apply_attack(const PosedImageSet& data, const AttackPlan& plan,
                           const AdversarialProvider& provider) {
  plan.validate();
  PosedImageSet out;
  out.role = DatasetRole::kPoisoned;
  out.entries.reserve(data.entries.size());
  for (size_t i = 0; i < data.entries.size(); ++i) {
    const PosedImage& entry = data.entries[i];
    const std::optional<size_t> j = region_of(entry.pose, plan);
    if (j.has_value()) {
      Image replacement = provider(i, *j);
      if (replacement.width() != entry.image.width() ||
          replacement.height() != entry.image.height()) {
        throw std::invalid_argument("apply_attack: provider image dimensions mismatch at view " +
                                    std::to_string(i));
      }
      out.entries.push_back(PosedImage{std::move(replacement), entry.pose, entry.name});
    } else {
      out.entries.push_back(entry);
    }
  }
  return out;
}

PoisonResult poison_synthetic(const SceneSpec& scene, const TextureBinding& benign_binding,
                              const AttackPlan& plan, const CaptureSpec& capture,
                              const Vec3& background, const RenderOptions& options) {
  plan.validate();
  for (const ViewRegion& r : plan.regions) {
    require(scene.palette.count(r.appearance) != 0,
            "region appearance names an unknown texture: " + r.appearance);
  }

  const std::vector<CameraPose> poses = make_views(capture);

  // Step 1: the benign scene at every pose.
  const SplatCloud benign_cloud = build_scene(scene, benign_binding);
  PoisonResult result;
  result.benign = render_set(benign_cloud, poses, background, options);
  result.target_aabb = scene.target_aabb();

  // Step 2: a re-textured scene per region, rendered only at member poses.
  std::vector<SplatCloud> adversarial_clouds;
  adversarial_clouds.reserve(plan.regions.size());
  for (const ViewRegion& r : plan.regions) {
    adversarial_clouds.push_back(build_scene(scene, TextureBinding::uniform(r.appearance)));
  }

  result.region_by_view.resize(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    result.region_by_view[i] = region_of(poses[i], plan);
  }

  result.poisoned = apply_attack(result.benign, plan, [&](size_t view, size_t region) {
    return render(adversarial_clouds[region], poses[view], background, options).image;
  });
  return result;
}

nlohmann::json plan_to_json(const AttackPlan& plan) {
  nlohmann::json regions = nlohmann::json::array();
  for (const ViewRegion& r : plan.regions) {
    regions.push_back(nlohmann::json{{"reference", pose_to_json(r.reference)},
                                     {"delta_deg", r.delta_deg},
                                     {"appearance", r.appearance}});
  }
  return nlohmann::json{{"regions", std::move(regions)}};
}

AttackPlan plan_from_json(const nlohmann::json& j) {
  AttackPlan plan;
  for (const auto& jr : j.at("regions")) {
    ViewRegion r;
    r.reference = pose_from_json(jr.at("reference"));
    r.delta_deg = jr.at("delta_deg").get<double>();
    r.appearance = jr.at("appearance").get<std::string>();
    plan.regions.push_back(std::move(r));
  }
  plan.validate();
  return plan;
}

void save_plan(const AttackPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << plan_to_json(plan).dump(2) << "\n";
}

AttackPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("attack plan parse error in " + path + ": " + e.what());
  }
  try {
    return plan_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("attack plan parse error in " + path + ": " + e.what());
  }
}

}  // namespace splatcamo
