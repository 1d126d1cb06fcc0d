#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatcamo/scene.hpp"

namespace splatcamo {

struct Detection {
  Box2D bbox;
  std::string klass;
  double confidence = 0.0;
};

/// Per-view detector outputs, keyed by view file name (keys unique and
/// ordered, so aggregation is deterministic).
using DetectionSet = std::map<std::string, std::vector<Detection>>;

struct GroundTruthEntry {
  std::string klass;
  Box2D bbox;
};

/// Views where the target is visible, with its class and projected box.
using GroundTruth = std::map<std::string, GroundTruthEntry>;

/// Intersection over union of two 2D boxes, in [0, 1].
double iou(const Box2D& a, const Box2D& b);

struct AsrResult {
  int successes = 0;
  int total = 0;
  double asr_percent = 0.0;
};

/// Attack success rate. A view counts toward the total when the benign
/// detections contain a target-class box with IoU >= 0.5 against ground truth
/// at confidence >= floor; it counts as a success when the adversarial
/// detections contain no such box. Throws when the total is zero (ASR
/// undefined). Both detection sets must cover every ground-truth view.
AsrResult compute_asr(const DetectionSet& benign, const DetectionSet& adversarial,
                      const GroundTruth& gt, const std::string& target_class,
                      double confidence_floor);

struct ApAr {
  double ap = 0.0;
  double ar = 0.0;
};

/// PASCAL-style AP/AR for one class: detections sorted by descending
/// confidence, greedy one-to-one matching at the IoU threshold, AP as the
/// area under the all-points interpolated precision-recall curve, AR as the
/// final recall.
ApAr compute_ap_ar(const DetectionSet& dets, const GroundTruth& gt,
                   const std::string& target_class, double iou_threshold = 0.5);

/// (adversarial - benign), rounded to 3 decimals as reported in result tables.
std::pair<double, double> delta_ap(const ApAr& benign, const ApAr& adversarial);

// --- toy detector ------------------------------------------------------------

struct ClassSignature {
  Vec3 color = Vec3::Zero();  // representative RGB
  double tolerance = 0.35;    // Euclidean RGB distance at which the score hits 0
};

struct ToyDetectorConfig {
  std::map<std::string, ClassSignature> classes;
  int min_area = 20;  // pixels per connected component
};

/// Signatures matched to the default synth palette's renderable classes.
ToyDetectorConfig default_toy_detector();

/// Deterministic color-signature detector: each pixel is assigned to the
/// class with the highest positive match score; 4-connected components of at
/// least min_area pixels become detections with the component bounding box
/// and the mean match score as confidence.
std::vector<Detection> toy_detect(const Image& view, const ToyDetectorConfig& config);

/// Best-matching class for the pixels inside a box, with its mean score;
/// empty class when nothing matches. Used to check which concealed
/// appearance a region reveals.
std::pair<std::string, double> classify_region(const Image& view, const Box2D& box,
                                               const ToyDetectorConfig& config);

// --- detections wire format ---------------------------------------------------
// { "<image file>": [ { "bbox": [x,y,w,h], "class": str, "confidence": p } ] }

nlohmann::json detections_to_json(const DetectionSet& dets);
DetectionSet detections_from_json(const nlohmann::json& j);
void save_detections(const DetectionSet& dets, const std::string& path);
DetectionSet load_detections(const std::string& path);

}  // namespace splatcamo
