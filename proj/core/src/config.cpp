#include "splatcamo/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace splatcamo {

namespace {

Vec3 vec3_from(const nlohmann::json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

nlohmann::json vec3_to(const Vec3& v) { return nlohmann::json{v.x(), v.y(), v.z()}; }

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec3(const nlohmann::json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = vec3_from(j.at(key));
}

Texture texture_from_json(const nlohmann::json& j) {
  Texture t;
  const std::string kind = j.value("kind", "solid");
  if (kind == "solid") t.kind = Texture::Kind::kSolid;
  else if (kind == "stripes") t.kind = Texture::Kind::kStripes;
  else if (kind == "noise") t.kind = Texture::Kind::kNoise;
  else if (kind == "disc") t.kind = Texture::Kind::kDisc;
  else if (kind == "checker") t.kind = Texture::Kind::kChecker;
  else throw std::invalid_argument("unknown texture kind: " + kind);
  maybe_vec3(j, "color_a", t.color_a);
  t.color_b = t.color_a;
  maybe_vec3(j, "color_b", t.color_b);
  maybe(j, "feature", t.feature);
  return t;
}

CaptureLayout layout_from_string(const std::string& s) {
  if (s == "hemisphere") return CaptureLayout::kHemisphere;
  if (s == "arc") return CaptureLayout::kArc;
  if (s == "ring") return CaptureLayout::kRing;
  throw std::invalid_argument("unknown capture layout: " + s);
}

std::string layout_to_string(CaptureLayout l) {
  switch (l) {
    case CaptureLayout::kHemisphere: return "hemisphere";
    case CaptureLayout::kArc: return "arc";
    case CaptureLayout::kRing: return "ring";
  }
  return "hemisphere";
}

CaptureSpec capture_from_json(const nlohmann::json& j, uint64_t default_seed) {
  CaptureSpec c;
  c.seed = default_seed;
  if (j.contains("layout")) c.layout = layout_from_string(j.at("layout").get<std::string>());
  maybe(j, "views", c.view_count);
  maybe(j, "radius", c.radius);
  maybe(j, "altitude", c.altitude);
  maybe(j, "arc_span_deg", c.arc_span_deg);
  maybe_vec3(j, "look_at", c.look_at);
  maybe(j, "seed", c.seed);
  maybe(j, "width", c.width);
  maybe(j, "height", c.height);
  maybe(j, "focal_px", c.focal_px);
  c.validate();
  return c;
}

}  // namespace

CameraPose reference_pose(const CaptureSpec& capture, double azimuth_deg, double elevation_deg) {
  const double az = deg_to_rad(azimuth_deg);
  const double el = deg_to_rad(elevation_deg);
  const Vec3 dir(std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az));
  return CameraPose::look_at(capture.look_at + capture.radius * dir, capture.look_at,
                             capture.intrinsics());
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, std::string raw_text) {
  PipelineConfig cfg;
  cfg.raw_text = std::move(raw_text);
  maybe(j, "seed", cfg.seed);
  maybe(j, "out_dir", cfg.out_dir);
  maybe_vec3(j, "background", cfg.background);
  maybe(j, "init_color_noise", cfg.init_color_noise);
  maybe(j, "benign_appearance", cfg.benign_appearance);

  cfg.scene.seed = cfg.seed;
  if (j.contains("scene")) {
    const auto& js = j.at("scene");
    maybe(js, "ground_extent", cfg.scene.ground_extent);
    maybe(js, "ground_texture", cfg.scene.ground_texture);
    maybe_vec3(js, "target_center", cfg.scene.target_center);
    maybe_vec3(js, "target_size", cfg.scene.target_size);
    maybe(js, "target_class", cfg.scene.target_class);
    maybe(js, "density", cfg.scene.density);
    maybe(js, "seed", cfg.scene.seed);
    maybe(js, "sh_order", cfg.scene.sh_order);
    if (js.contains("palette")) {
      for (const auto& [name, jt] : js.at("palette").items()) {
        cfg.scene.palette[name] = texture_from_json(jt);
      }
    }
  }
  cfg.scene.validate();

  if (j.contains("capture")) {
    cfg.capture = capture_from_json(j.at("capture"), cfg.seed);
  } else {
    cfg.capture.seed = cfg.seed;
    cfg.capture.look_at = cfg.scene.target_center;
  }

  if (j.contains("test_capture")) {
    const auto& jt = j.at("test_capture");
    if (jt.contains("radii")) cfg.test_capture.radii = jt.at("radii").get<std::vector<double>>();
    maybe(jt, "overhead_views", cfg.test_capture.overhead_views);
    maybe(jt, "side_views", cfg.test_capture.side_views);
    maybe(jt, "overhead_min_elevation_deg", cfg.test_capture.overhead_min_elevation_deg);
    maybe(jt, "side_min_elevation_deg", cfg.test_capture.side_min_elevation_deg);
    maybe(jt, "side_max_elevation_deg", cfg.test_capture.side_max_elevation_deg);
    maybe(jt, "seed", cfg.test_capture.seed);
  }

  if (j.contains("attack")) {
    for (const auto& jr : j.at("attack").at("regions")) {
      ViewRegion region;
      if (jr.contains("reference")) {
        region.reference = pose_from_json(jr.at("reference"));
      } else {
        region.reference = reference_pose(cfg.capture, jr.value("azimuth_deg", 0.0),
                                          jr.at("elevation_deg").get<double>());
      }
      region.delta_deg = jr.at("delta_deg").get<double>();
      region.appearance = jr.at("appearance").get<std::string>();
      cfg.attack.regions.push_back(std::move(region));
    }
    cfg.attack.validate();
  }

  if (j.contains("train")) {
    const auto& jt = j.at("train");
    maybe(jt, "iterations", cfg.train.iterations);
    maybe(jt, "lr_sh", cfg.train.lr_sh);
    maybe(jt, "lr_opacity", cfg.train.lr_opacity);
    maybe(jt, "lr_means", cfg.train.lr_means);
    maybe(jt, "lr_scales", cfg.train.lr_scales);
    maybe(jt, "ssim_weight", cfg.train.ssim_weight);
    maybe(jt, "batch_size", cfg.train.batch_size);
    maybe(jt, "checkpoint_interval", cfg.train.checkpoint_interval);
    maybe(jt, "checkpoint_dir", cfg.train.checkpoint_dir);
    maybe(jt, "threads", cfg.train.threads);
    cfg.train.seed = cfg.seed;
    maybe(jt, "seed", cfg.train.seed);
    if (jt.contains("trainable")) {
      const auto& jf = jt.at("trainable");
      maybe(jf, "sh", cfg.train.trainable.sh);
      maybe(jf, "opacity", cfg.train.trainable.opacity);
      maybe(jf, "means", cfg.train.trainable.means);
      maybe(jf, "scales", cfg.train.trainable.scales);
    }
  } else {
    cfg.train.seed = cfg.seed;
  }
  cfg.train.background = cfg.background;
  cfg.train.validate();

  cfg.eval.target_class = cfg.scene.target_class;
  if (j.contains("eval")) {
    const auto& je = j.at("eval");
    maybe(je, "detector", cfg.eval.detector);
    maybe(je, "detector_output", cfg.eval.detector_output);
    maybe(je, "confidence_floor", cfg.eval.confidence_floor);
    maybe(je, "target_class", cfg.eval.target_class);
    maybe(je, "iou_threshold", cfg.eval.iou_threshold);
    maybe(je, "toy_min_area", cfg.eval.toy_min_area);
  }

  if (j.contains("ablate")) {
    const auto& ja = j.at("ablate");
    if (ja.contains("sh_orders")) cfg.ablate.sh_orders = ja.at("sh_orders").get<std::vector<int>>();
    if (ja.contains("altitudes"))
      cfg.ablate.altitudes = ja.at("altitudes").get<std::vector<double>>();
    maybe(ja, "ring_radius", cfg.ablate.ring_radius);
    maybe(ja, "ring_views", cfg.ablate.ring_views);
  }

  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  try {
    return pipeline_config_from_json(j, raw);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
}

nlohmann::json PipelineConfig::provenance() const {
  std::ostringstream hash;
  hash << std::hex << fnv1a(raw_text);
  return nlohmann::json{{"config_hash", hash.str()}, {"seed", seed}, {"version", kVersion}};
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["background"] = vec3_to(cfg.background);
  j["init_color_noise"] = cfg.init_color_noise;
  j["benign_appearance"] = cfg.benign_appearance;
  j["scene"] = nlohmann::json{{"ground_extent", cfg.scene.ground_extent},
                              {"ground_texture", cfg.scene.ground_texture},
                              {"target_center", vec3_to(cfg.scene.target_center)},
                              {"target_size", vec3_to(cfg.scene.target_size)},
                              {"target_class", cfg.scene.target_class},
                              {"density", cfg.scene.density},
                              {"seed", cfg.scene.seed},
                              {"sh_order", cfg.scene.sh_order}};
  j["capture"] = nlohmann::json{{"layout", layout_to_string(cfg.capture.layout)},
                                {"views", cfg.capture.view_count},
                                {"radius", cfg.capture.radius},
                                {"altitude", cfg.capture.altitude},
                                {"arc_span_deg", cfg.capture.arc_span_deg},
                                {"look_at", vec3_to(cfg.capture.look_at)},
                                {"seed", cfg.capture.seed},
                                {"width", cfg.capture.width},
                                {"height", cfg.capture.height},
                                {"focal_px", cfg.capture.focal_px}};
  j["test_capture"] = nlohmann::json{
      {"radii", cfg.test_capture.radii},
      {"overhead_views", cfg.test_capture.overhead_views},
      {"side_views", cfg.test_capture.side_views},
      {"overhead_min_elevation_deg", cfg.test_capture.overhead_min_elevation_deg},
      {"side_min_elevation_deg", cfg.test_capture.side_min_elevation_deg},
      {"side_max_elevation_deg", cfg.test_capture.side_max_elevation_deg},
      {"seed", cfg.test_capture.seed}};
  if (!cfg.attack.regions.empty()) j["attack"] = plan_to_json(cfg.attack);
  j["train"] = nlohmann::json{{"iterations", cfg.train.iterations},
                              {"lr_sh", cfg.train.lr_sh},
                              {"lr_opacity", cfg.train.lr_opacity},
                              {"lr_means", cfg.train.lr_means},
                              {"lr_scales", cfg.train.lr_scales},
                              {"ssim_weight", cfg.train.ssim_weight},
                              {"batch_size", cfg.train.batch_size},
                              {"checkpoint_interval", cfg.train.checkpoint_interval},
                              {"threads", cfg.train.threads},
                              {"seed", cfg.train.seed},
                              {"trainable", nlohmann::json{{"sh", cfg.train.trainable.sh},
                                                           {"opacity", cfg.train.trainable.opacity},
                                                           {"means", cfg.train.trainable.means},
                                                           {"scales", cfg.train.trainable.scales}}}};
  j["eval"] = nlohmann::json{{"detector", cfg.eval.detector},
                             {"detector_output", cfg.eval.detector_output},
                             {"confidence_floor", cfg.eval.confidence_floor},
                             {"target_class", cfg.eval.target_class},
                             {"iou_threshold", cfg.eval.iou_threshold},
                             {"toy_min_area", cfg.eval.toy_min_area}};
  j["ablate"] = nlohmann::json{{"sh_orders", cfg.ablate.sh_orders},
                               {"altitudes", cfg.ablate.altitudes},
                               {"ring_radius", cfg.ablate.ring_radius},
                               {"ring_views", cfg.ablate.ring_views}};
  return j;
}

}  // namespace splatcamo
