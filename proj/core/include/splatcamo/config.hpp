#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatcamo/attack.hpp"
#include "splatcamo/eval.hpp"
#include "splatcamo/trainer.hpp"

namespace splatcamo {

inline constexpr const char* kVersion = "0.1.0";

/// Held-out evaluation capture: random views on growing test hemispheres,
/// split into an overhead band (the attacked region) and a side band.
struct TestCaptureSpec {
  std::vector<double> radii{4.4, 4.8, 5.2, 5.6, 6.0};
  int overhead_views = 40;
  int side_views = 40;
  double overhead_min_elevation_deg = 60.0;
  double side_min_elevation_deg = 12.0;
  double side_max_elevation_deg = 45.0;
  uint64_t seed = 99;
};

struct EvalSettings {
  std::string detector = "toy";  // "toy" or an external command
  std::string detector_output;   // detections path the external command writes
  double confidence_floor = 0.5;
  std::string target_class = "car";
  double iou_threshold = 0.5;
  int toy_min_area = 20;
};

struct AblateSettings {
  std::vector<int> sh_orders{0, 1, 2};
  std::vector<double> altitudes{1.2, 1.6, 2.0, 2.4, 3.0};
  double ring_radius = 2.2;
  int ring_views = 24;
};

/// One pipeline, one document: every subcommand reads the same config.
struct PipelineConfig {
  uint64_t seed = 7;
  std::string out_dir = "out";
  SceneSpec scene;
  std::string benign_appearance = "car-blue";
  CaptureSpec capture;
  TestCaptureSpec test_capture;
  AttackPlan attack;
  TrainConfig train;
  EvalSettings eval;
  AblateSettings ablate;
  Vec3 background = Vec3(0.7, 0.8, 0.9);
  double init_color_noise = 0.25;

  std::string raw_text;  // exact config bytes, hashed into provenance stamps

  TextureBinding benign_binding() const { return TextureBinding::uniform(benign_appearance); }
  nlohmann::json provenance() const;
};

/// Parses a pipeline document. Attack regions accept either a full reference
/// pose or an (azimuth_deg, elevation_deg) shorthand resolved against the
/// capture geometry.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, std::string raw_text);
PipelineConfig load_pipeline_config(const std::string& path);

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

/// Reference pose on the capture sphere at the given angles, looking at the
/// capture look-at point.
CameraPose reference_pose(const CaptureSpec& capture, double azimuth_deg, double elevation_deg);

}  // namespace splatcamo
