#pragma once

#include <string>

#include "splatcamo/config.hpp"

namespace splatcamo::cli {

/// Render the benign ground-truth scene at the training capture poses and
/// write images + camera manifest + scene document into `out_dir`.
void cmd_capture(const PipelineConfig& cfg, const std::string& out_dir);

/// Apply the viewpoint-region poisoning to a captured dataset. `plan_path`
/// may be empty, in which case the plan embedded in the dataset's config is
/// used. Untouched views are copied byte-identically; replaced views are
/// re-rendered with the region's adversarial texture binding.
void cmd_poison(const std::string& dataset_dir, const std::string& plan_path,
                const std::string& out_dir);

/// Fit a splat cloud to a captured (benign or poisoned) dataset; writes
/// cloud.bin and train_report.json. Initialization is the ground-truth scene
/// geometry with perturbed colors, or a uniform box scatter of `init_count`
/// splats when `init_mode` is "scatter".
void cmd_train(const std::string& dataset_dir, const std::string& out_dir,
               const std::string& init_mode = "geometry", int init_count = 4000);

/// Render a cloud at every view of a camera manifest.
void cmd_render(const std::string& cloud_path, const std::string& views_path,
                const std::string& out_dir, const Vec3& background);

struct EvalOutcome {
  AsrResult overhead_asr;
  ApAr overhead_benign;
  ApAr overhead_adv;
  double delta_ap_value = 0.0;
  double delta_ar_value = 0.0;
  double side_benign_rate = 0.0;
  double side_adv_rate = 0.0;
  int overhead_views = 0;
  int side_views = 0;
};

/// Detection-based evaluation of a trained cloud on held-out overhead and
/// side views. The benign reference is `benign_cloud_path` when given,
/// otherwise the ground-truth scene. Writes the report document and rendered
/// eval views under `out_dir`.
EvalOutcome cmd_eval(const PipelineConfig& cfg, const std::string& cloud_path,
                     const std::string& benign_cloud_path, const std::string& out_dir,
                     const std::string& report_path);

/// Toy detector over every PNG in a directory; writes the detections
/// document. This is also the reference external-detector implementation.
void cmd_detect(const std::string& images_dir, const std::string& out_path, int min_area);

struct AblateShRow {
  int order = 0;
  ApAr adversarial;
  ApAr benign;
};

/// SH-order ablation: runs the capture/poison/train/eval pipeline per order.
/// Order 0 runs assert per-splat color view-invariance.
std::vector<AblateShRow> cmd_ablate_sh(const PipelineConfig& cfg, const std::string& out_dir);

struct AblateAltitudeRow {
  double altitude = 0.0;
  ApAr benign;
  ApAr adversarial;
  double delta_ap_value = 0.0;
  double delta_ar_value = 0.0;
};

struct AblateAltitudeResult {
  std::vector<AblateAltitudeRow> rows;
  double spearman = 0.0;  // rank correlation of altitude vs delta AP
};

/// Camera-altitude ablation: trains benign and poisoned clouds once, then
/// evaluates both on a fixed-altitude ring per configured altitude.
AblateAltitudeResult cmd_ablate_altitude(const PipelineConfig& cfg, const std::string& out_dir);

/// Prints cloud header info; optionally dumps the human-readable export.
void cmd_inspect(const std::string& cloud_path, const std::string& text_path);

/// Spearman rank correlation (average ranks for ties).
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace splatcamo::cli
