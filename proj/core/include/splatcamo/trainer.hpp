#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatcamo/renderer.hpp"
#include "splatcamo/ssim.hpp"

namespace splatcamo {

struct TrainableFlags {
  bool sh = true;
  bool opacity = true;
  bool means = false;
  bool scales = false;
};

struct TrainConfig {
  int iterations = 1000;
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_means = 1e-4;
  double lr_scales = 1e-3;
  double ssim_weight = 0.2;  // loss mix: (1-w)*L1 + w*(1-SSIM)
  int batch_size = 4;
  uint64_t seed = 0;
  TrainableFlags trainable;
  Vec3 background = Vec3(0.7, 0.8, 0.9);
  int checkpoint_interval = 50;
  /// When nonempty, each checkpoint's cloud is saved here in the splat-cloud
  /// binary format (cloud_<iteration>.bin).
  std::string checkpoint_dir;
  int threads = 0;  // parallelism over the views of a step

  void validate() const;
};

struct Checkpoint {
  int iteration = 0;
  double mean_loss = 0.0;
  double mean_ssim = 0.0;
  double seconds = 0.0;  // wall clock since training start
};

struct TrainReport {
  std::vector<Checkpoint> checkpoints;
  double wall_seconds = 0.0;
  SplatCloud final_cloud;
};

/// Per-splat loss gradients with respect to the raw parameter values
/// (opacity and scale gradients are pre-reparameterization).
struct SceneGradients {
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> sh;
  Eigen::VectorXd opacity;
  std::vector<Vec3> means;
  std::vector<Vec3> scales;

  void init(const SplatCloud& cloud);
  void add_scaled(const SceneGradients& other, double factor);
};

/// Renders the cloud at the target's pose and evaluates
/// (1 - ssim_weight) * L1 + ssim_weight * (1 - SSIM) against the target
/// image, backpropagating analytically through compositing, the projected
/// covariances and the SH decode when `grads` is non-null.
double loss_and_gradients(const SplatCloud& cloud, const Image& target, const CameraPose& pose,
                          double ssim_weight, const Vec3& background, SceneGradients* grads,
                          int threads = 1);

/// Gradient descent on the splat parameters enabled in cfg.trainable using a
/// per-parameter adaptive first-order update (momentum + RMS scaling). Splat
/// count and every untrained parameter stay bit-identical. Opacities are
/// optimized through a logistic squashing, so they remain inside [0, 1];
/// scales through a log map, so they remain positive. Views are sampled in
/// seeded shuffled epochs. Throws on non-finite loss, naming iteration and
/// view.
std::pair<SplatCloud, TrainReport> train(const SplatCloud& initial, const PosedImageSet& data,
                                         const TrainConfig& cfg);

/// First checkpoint wall-clock where mean SSIM >= threshold, if any.
std::optional<double> time_to_ssim(const TrainReport& report, double threshold);

/// Training initialization from ground-truth geometry: keeps means, scales,
/// rotations and opacities, replaces each color with its view-averaged RGB
/// plus seeded noise (higher SH bands zeroed).
SplatCloud init_from_geometry(const SplatCloud& ground_truth, double color_noise_sigma,
                              uint64_t seed);

/// Fallback initialization with no geometry: uniform scatter inside a box.
SplatCloud scatter_box_cloud(const Aabb& bounds, size_t count, int sh_order, uint64_t seed);

/// Train-report document: iterations, per-checkpoint losses/SSIMs/seconds.
nlohmann::json report_to_json(const TrainReport& report, int iterations);
void save_train_report(const TrainReport& report, int iterations, const std::string& path,
                       const nlohmann::json& extra = nlohmann::json::object());

}  // namespace splatcamo
