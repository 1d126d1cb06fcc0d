#include "splatcamo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace splatcamo {

void TrainConfig::validate() const {
  require(iterations >= 1, "iterations must be >= 1");
  require(lr_sh > 0.0 && lr_opacity > 0.0 && lr_means > 0.0 && lr_scales > 0.0,
          "learning rates must be positive");
  require(ssim_weight >= 0.0 && ssim_weight <= 1.0, "loss mix must be in [0, 1]");
  require(batch_size >= 1, "batch size must be >= 1");
  require(checkpoint_interval >= 1, "checkpoint interval must be >= 1");
}

void SceneGradients::init(const SplatCloud& cloud) {
  const int k = sh_coeff_count(cloud.sh_order);
  sh.assign(cloud.size(), Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, k));
  opacity = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud.size()));
  means.assign(cloud.size(), Vec3::Zero());
  scales.assign(cloud.size(), Vec3::Zero());
}

void SceneGradients::add_scaled(const SceneGradients& other, double factor) {
  for (size_t i = 0; i < sh.size(); ++i) sh[i] += factor * other.sh[i];
  opacity += factor * other.opacity;
  for (size_t i = 0; i < means.size(); ++i) means[i] += factor * other.means[i];
  for (size_t i = 0; i < scales.size(); ++i) scales[i] += factor * other.scales[i];
}

double loss_and_gradients(const SplatCloud& cloud, const Image& target, const CameraPose& pose,
                          double ssim_weight, const Vec3& background, SceneGradients* grads,
                          int threads) {
  require(target.width() == pose.intrinsics.width && target.height() == pose.intrinsics.height,
          "target image dimensions must match the pose intrinsics");

  ForwardCapture capture;
  RenderOptions opts;
  opts.threads = threads;
  const RenderedView view = render(cloud, pose, background, opts, &capture);

  // A render that equals its target bit-exactly is a true optimum of both
  // loss terms; report it as such so a converged scene is an exact fixed
  // point instead of accumulating rounding dust through the backward pass.
  if (view.image.bit_equal(target)) {
    if (grads) grads->init(cloud);
    return 0.0;
  }

  const int w = target.width(), h = target.height();
  const double n_values = 3.0 * w * h;

  double l1 = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double* r = view.image.pixel(x, y);
      const double* t = target.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) l1 += std::abs(r[ch] - t[ch]);
    }
  }
  l1 /= n_values;

  Image ssim_grad;
  double ssim_value = 1.0;
  if (ssim_weight > 0.0) {
    ssim_value = grads ? ssim_with_gradient(view.image, target, ssim_grad)
                       : ssim(view.image, target);
  }
  const double loss = (1.0 - ssim_weight) * l1 + ssim_weight * (1.0 - ssim_value);
  if (!grads) return loss;

  // d(loss)/d(rendered image), with the final [0,1] clamp as a subgradient:
  // pixels that were clamped pass no gradient.
  Image pixel_grad(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double* r = view.image.pixel(x, y);
      const double* t = target.pixel(x, y);
      const double* raw = capture.raw.pixel(x, y);
      double* g = pixel_grad.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        double gv = (1.0 - ssim_weight) * ((r[ch] > t[ch]) - (r[ch] < t[ch])) / n_values;
        if (ssim_weight > 0.0) gv -= ssim_weight * ssim_grad.pixel(x, y)[ch];
        if (raw[ch] < 0.0 || raw[ch] > 1.0) gv = 0.0;
        g[ch] = gv;
      }
    }
  }

  grads->init(cloud);

  // Per-projection accumulators for the compositing backward pass.
  const size_t n_proj = capture.projections.size();
  std::vector<Vec3> g_color(n_proj, Vec3::Zero());
  std::vector<Vec2> g_center(n_proj, Vec2::Zero());
  std::vector<Mat2> g_q(n_proj, Mat2::Zero());  // wrt the inverse covariance

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& contribs = capture.pixels[static_cast<size_t>(y) * w + x];
      if (contribs.empty()) continue;
      const Vec3 gp = pixel_grad.rgb(x, y);
      const Vec2 pix(x + 0.5, y + 0.5);

      // Walk the contributions back to front, keeping the composited color
      // behind the current splat; dC/dalpha_i = T_i * (c_i - behind).
      Vec3 behind = background;
      for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
        const SplatProjection& p = capture.projections[it->proj];
        const double opacity = cloud.splats[p.splat_index].opacity;

        g_color[it->proj] += gp * (it->trans_before * it->alpha);

        const double g_alpha = gp.dot(it->trans_before * (p.color - behind));
        grads->opacity[p.splat_index] += g_alpha * it->gauss;

        const double g_m2 = -0.5 * it->gauss * g_alpha * opacity;
        const Vec2 delta = pix - p.center;
        const Vec2 q_delta = p.cov_inv * delta;
        g_center[it->proj] += -2.0 * g_m2 * q_delta;
        g_q[it->proj] += g_m2 * delta * delta.transpose();

        behind = it->alpha * p.color + (1.0 - it->alpha) * behind;
      }
    }
  }

  // Chain per-projection gradients back to splat parameters.
  const Mat3 world_to_cam = pose.world_to_camera();
  const double f = pose.intrinsics.focal_px;
  for (size_t pi = 0; pi < n_proj; ++pi) {
    const SplatProjection& p = capture.projections[pi];
    const Splat& s = cloud.splats[p.splat_index];
    const int si = p.splat_index;

    // Color path: coefficients and, through the view direction, the mean.
    const Eigen::VectorXd basis = eval_sh_basis(p.view_dir, s.color.order);
    Vec3 gc = g_color[pi];
    for (int ch = 0; ch < 3; ++ch) {
      if (p.color_clamped[ch]) gc[ch] = 0.0;  // decode's lower clamp
      grads->sh[si].row(ch) += gc[ch] * basis.transpose();
    }
    if (gc != Vec3::Zero()) {
      const auto basis_grad = eval_sh_basis_gradient(p.view_dir, s.color.order);
      // d(color_ch)/d(dir) = coeffs.row(ch) * dY/ddir
      Vec3 g_dir = Vec3::Zero();
      for (int ch = 0; ch < 3; ++ch) {
        if (gc[ch] == 0.0) continue;
        g_dir += gc[ch] * (basis_grad * s.color.coeffs.row(ch).transpose());
      }
      // dir = offset / |offset|; d(dir)/d(mean) = (I - dir dir^T) / dist
      const Mat3 proj_tangent = Mat3::Identity() - p.view_dir * p.view_dir.transpose();
      grads->means[si] += proj_tangent * g_dir / p.view_dist;
    }

    // Covariance path: Q = cov^-1, dL/dcov = -Q gQ Q (Q symmetric).
    const Mat2 g_cov = -p.cov_inv * g_q[pi] * p.cov_inv;
    const Eigen::Matrix<double, 2, 3> a = p.jacobian * world_to_cam;
    const Mat3 sigma = s.covariance();
    const Mat3 g_sigma = a.transpose() * g_cov * a;

    // Sigma = R diag(scale^2) R^T with R fixed.
    const Mat3 rot = s.rotation_matrix();
    const Mat3 rt_g_r = rot.transpose() * g_sigma * rot;
    for (int k = 0; k < 3; ++k) grads->scales[si][k] += 2.0 * s.scale[k] * rt_g_r(k, k);

    // Screen-space center and Jacobian both depend on the camera-space mean.
    const Eigen::Matrix<double, 2, 3> g_a = 2.0 * g_cov * a * sigma;
    const Eigen::Matrix<double, 2, 3> g_jac = g_a * world_to_cam.transpose();

    Vec3 g_t = p.jacobian.transpose() * g_center[pi];
    const double tz = p.t_cam.z();
    const double tz2 = tz * tz;
    const double tz3 = tz2 * tz;
    g_t[0] += g_jac(0, 2) * (-f / tz2);
    g_t[1] += g_jac(1, 2) * (f / tz2);
    g_t[2] += g_jac(0, 0) * (-f / tz2) + g_jac(0, 2) * (2.0 * f * p.t_cam.x() / tz3) +
              g_jac(1, 1) * (f / tz2) + g_jac(1, 2) * (-2.0 * f * p.t_cam.y() / tz3);

    grads->means[si] += world_to_cam.transpose() * g_t;
  }

  return loss;
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Flat parameter vector over the trainable blocks plus the bookkeeping to
/// move values and gradients between the vector and a cloud.
///
/// The vector stores raw parameter values, so pack/unpack round trips are
/// bit-exact (a zero-gradient scene is a true fixed point). Constrained
/// blocks (opacity in [0,1], scale > 0) optimize in a squashed space: their
/// gradients are chain-ruled into logit/log space and updates are applied
/// through the squashing, but a zero update leaves the raw value untouched.
class ParamMap {
 public:
  enum class Kind { kLinear, kLogit, kLog };

  ParamMap(const SplatCloud& cloud, const TrainConfig& cfg) : cfg_(cfg) {
    n_splats_ = cloud.size();
    coeffs_per_splat_ = 3 * sh_coeff_count(cloud.sh_order);
    size_t offset = 0;
    if (cfg.trainable.sh) {
      sh_offset_ = offset;
      offset += n_splats_ * coeffs_per_splat_;
    }
    if (cfg.trainable.opacity) {
      opacity_offset_ = offset;
      offset += n_splats_;
    }
    if (cfg.trainable.means) {
      means_offset_ = offset;
      offset += n_splats_ * 3;
    }
    if (cfg.trainable.scales) {
      scales_offset_ = offset;
      offset += n_splats_ * 3;
    }
    size_ = offset;
  }

  size_t size() const { return size_; }

  Kind kind_of(size_t index) const {
    if (cfg_.trainable.opacity && index >= opacity_offset_ && index < opacity_offset_ + n_splats_)
      return Kind::kLogit;
    if (cfg_.trainable.scales && index >= scales_offset_ && index < scales_offset_ + n_splats_ * 3)
      return Kind::kLog;
    return Kind::kLinear;
  }

  Eigen::VectorXd pack(const SplatCloud& cloud) const {
    Eigen::VectorXd x(size_);
    for (size_t i = 0; i < n_splats_; ++i) {
      const Splat& s = cloud.splats[i];
      if (cfg_.trainable.sh) {
        size_t at = sh_offset_ + i * coeffs_per_splat_;
        for (int ch = 0; ch < 3; ++ch)
          for (int k = 0; k < s.color.coeffs.cols(); ++k) x[at++] = s.color.coeffs(ch, k);
      }
      if (cfg_.trainable.opacity) x[opacity_offset_ + i] = s.opacity;
      if (cfg_.trainable.means)
        for (int k = 0; k < 3; ++k) x[means_offset_ + i * 3 + k] = s.mean[k];
      if (cfg_.trainable.scales)
        for (int k = 0; k < 3; ++k) x[scales_offset_ + i * 3 + k] = s.scale[k];
    }
    return x;
  }

  void unpack(const Eigen::VectorXd& x, SplatCloud& cloud) const {
    for (size_t i = 0; i < n_splats_; ++i) {
      Splat& s = cloud.splats[i];
      if (cfg_.trainable.sh) {
        size_t at = sh_offset_ + i * coeffs_per_splat_;
        for (int ch = 0; ch < 3; ++ch)
          for (int k = 0; k < s.color.coeffs.cols(); ++k) s.color.coeffs(ch, k) = x[at++];
      }
      if (cfg_.trainable.opacity) s.opacity = x[opacity_offset_ + i];
      if (cfg_.trainable.means)
        for (int k = 0; k < 3; ++k) s.mean[k] = x[means_offset_ + i * 3 + k];
      if (cfg_.trainable.scales)
        for (int k = 0; k < 3; ++k) s.scale[k] = x[scales_offset_ + i * 3 + k];
    }
  }

  /// Raw-value gradients -> flat gradient in optimization space (logit for
  /// opacity, log for scale).
  Eigen::VectorXd flatten(const SceneGradients& g, const SplatCloud& cloud) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
    for (size_t i = 0; i < n_splats_; ++i) {
      if (cfg_.trainable.sh) {
        size_t at = sh_offset_ + i * coeffs_per_splat_;
        for (int ch = 0; ch < 3; ++ch)
          for (int k = 0; k < g.sh[i].cols(); ++k) out[at++] = g.sh[i](ch, k);
      }
      if (cfg_.trainable.opacity) {
        const double o = cloud.splats[i].opacity;
        out[opacity_offset_ + i] = g.opacity[static_cast<Eigen::Index>(i)] * o * (1.0 - o);
      }
      if (cfg_.trainable.means)
        for (int k = 0; k < 3; ++k) out[means_offset_ + i * 3 + k] = g.means[i][k];
      if (cfg_.trainable.scales)
        for (int k = 0; k < 3; ++k)
          out[scales_offset_ + i * 3 + k] = g.scales[i][k] * cloud.splats[i].scale[k];
    }
    return out;
  }

  /// Applies an optimization-space step to the raw value at `index`.
  double apply_update(size_t index, double value, double delta) const {
    if (delta == 0.0) return value;  // exact fixed point
    switch (kind_of(index)) {
      case Kind::kLinear:
        return value - delta;
      case Kind::kLogit: {
        const double clamped = std::clamp(value, 1e-9, 1.0 - 1e-9);
        return sigmoid(logit(clamped) - delta);
      }
      case Kind::kLog:
        return std::exp(std::log(std::max(value, 1e-12)) - delta);
    }
    return value;
  }

  Eigen::VectorXd learning_rates() const {
    Eigen::VectorXd lr = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
    for (size_t i = 0; i < n_splats_; ++i) {
      if (cfg_.trainable.sh)
        for (size_t k = 0; k < coeffs_per_splat_; ++k)
          lr[sh_offset_ + i * coeffs_per_splat_ + k] = cfg_.lr_sh;
      if (cfg_.trainable.opacity) lr[opacity_offset_ + i] = cfg_.lr_opacity;
      if (cfg_.trainable.means)
        for (int k = 0; k < 3; ++k) lr[means_offset_ + i * 3 + k] = cfg_.lr_means;
      if (cfg_.trainable.scales)
        for (int k = 0; k < 3; ++k) lr[scales_offset_ + i * 3 + k] = cfg_.lr_scales;
    }
    return lr;
  }

 private:
  TrainConfig cfg_;
  size_t n_splats_ = 0;
  size_t coeffs_per_splat_ = 0;
  size_t sh_offset_ = 0, opacity_offset_ = 0, means_offset_ = 0, scales_offset_ = 0;
  size_t size_ = 0;
};

struct EvalStats {
  double mean_loss = 0.0;
  double mean_ssim = 0.0;
};

EvalStats evaluate_full(const SplatCloud& cloud, const PosedImageSet& data,
                        const TrainConfig& cfg) {
  EvalStats stats;
  for (const PosedImage& entry : data.entries) {
    RenderOptions opts;
    opts.threads = cfg.threads;
    const RenderedView view = render(cloud, entry.pose, cfg.background, opts);
    if (view.image.bit_equal(entry.image)) {
      stats.mean_ssim += 1.0;
      continue;
    }
    double l1 = 0.0;
    const int w = entry.image.width(), h = entry.image.height();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < 3; ++ch)
          l1 += std::abs(view.image.pixel(x, y)[ch] - entry.image.pixel(x, y)[ch]);
    l1 /= 3.0 * w * h;
    const double s = ssim(view.image, entry.image);
    stats.mean_loss += (1.0 - cfg.ssim_weight) * l1 + cfg.ssim_weight * (1.0 - s);
    stats.mean_ssim += s;
  }
  stats.mean_loss /= static_cast<double>(data.size());
  stats.mean_ssim /= static_cast<double>(data.size());
  return stats;
}

}  // namespace

std::pair<SplatCloud, TrainReport> train(const SplatCloud& initial, const PosedImageSet& data,
                                         const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  require(!data.entries.empty(), "training data must be nonempty");
  for (const PosedImage& e : data.entries) {
    require(e.image.width() == e.pose.intrinsics.width &&
                e.image.height() == e.pose.intrinsics.height,
            "training image dimensions must match the pose intrinsics");
  }

  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  SplatCloud cloud = initial;
  const ParamMap params(cloud, cfg);
  require(params.size() > 0, "no trainable parameters enabled");
  Eigen::VectorXd x = params.pack(cloud);

  const Eigen::VectorXd lr = params.learning_rates();
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(x.size());
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  TrainReport report;
  const EvalStats init_stats = evaluate_full(cloud, data, cfg);
  report.checkpoints.push_back(Checkpoint{0, init_stats.mean_loss, init_stats.mean_ssim,
                                          elapsed()});

  // Seeded shuffled epochs over the view indices.
  Rng rng(cfg.seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  size_t cursor = 0;
  const auto next_view = [&]() -> size_t {
    if (cursor == order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    return order[cursor++];
  };

  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(data.size()));
  std::vector<size_t> batch_views(batch);
  std::vector<SceneGradients> view_grads(batch);
  std::vector<double> view_losses(batch);

  for (int step = 1; step <= cfg.iterations; ++step) {
    for (int b = 0; b < batch; ++b) batch_views[b] = next_view();

    // Per-view gradients in parallel; reduced in fixed order below.
    parallel_for(0, batch, cfg.threads, [&](int b) {
      const PosedImage& entry = data.entries[batch_views[b]];
      view_losses[b] = loss_and_gradients(cloud, entry.image, entry.pose, cfg.ssim_weight,
                                          cfg.background, &view_grads[b], 1);
    });

    SceneGradients grads;
    grads.init(cloud);
    double step_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (!std::isfinite(view_losses[b])) {
        throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(step) +
                                 ", view " + std::to_string(batch_views[b]) +
                                 (data.entries[batch_views[b]].name.empty()
                                      ? ""
                                      : " (" + data.entries[batch_views[b]].name + ")"));
      }
      step_loss += view_losses[b];
      grads.add_scaled(view_grads[b], 1.0 / batch);
    }
    step_loss /= batch;

    const Eigen::VectorXd g = params.flatten(grads, cloud);
    adam_m = kBeta1 * adam_m + (1.0 - kBeta1) * g;
    adam_v = kBeta2 * adam_v + (1.0 - kBeta2) * g.cwiseProduct(g);
    const double bias1 = 1.0 - std::pow(kBeta1, step);
    const double bias2 = 1.0 - std::pow(kBeta2, step);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double m_hat = adam_m[i] / bias1;
      const double v_hat = adam_v[i] / bias2;
      const double delta = lr[i] * m_hat / (std::sqrt(v_hat) + kEps);
      x[i] = params.apply_update(static_cast<size_t>(i), x[i], delta);
    }
    params.unpack(x, cloud);

    if (step % cfg.checkpoint_interval == 0 || step == cfg.iterations) {
      const EvalStats stats = evaluate_full(cloud, data, cfg);
      if (!std::isfinite(stats.mean_loss)) {
        throw std::runtime_error("train: non-finite checkpoint loss at iteration " +
                                 std::to_string(step));
      }
      report.checkpoints.push_back(Checkpoint{step, stats.mean_loss, stats.mean_ssim, elapsed()});
      if (!cfg.checkpoint_dir.empty()) {
        char name[48];
        std::snprintf(name, sizeof(name), "/cloud_%06d.bin", step);
        save_cloud(cloud, cfg.checkpoint_dir + name);
      }
    }
  }

  report.wall_seconds = elapsed();
  report.final_cloud = cloud;
  return {std::move(cloud), std::move(report)};
}

std::optional<double> time_to_ssim(const TrainReport& report, double threshold) {
  require(!report.checkpoints.empty(), "time_to_ssim needs at least one checkpoint");
  for (const Checkpoint& cp : report.checkpoints) {
    if (cp.mean_ssim >= threshold) return cp.seconds;
  }
  return std::nullopt;
}

SplatCloud init_from_geometry(const SplatCloud& ground_truth, double color_noise_sigma,
                              uint64_t seed) {
  SplatCloud cloud = ground_truth;
  Rng rng(seed);
  for (Splat& s : cloud.splats) {
    // The ground-truth clouds carry view-independent colors, so the DC term
    // is the whole color; perturb it in RGB space and drop higher bands.
    const Vec3 rgb = eval_sh_color(s.color, Vec3(0, 1, 0));
    Vec3 noisy;
    for (int ch = 0; ch < 3; ++ch) {
      noisy[ch] = std::clamp(rgb[ch] + color_noise_sigma * rng.normal(), 0.0, 1.0);
    }
    s.color = ShColor::constant(cloud.sh_order, noisy);
  }
  return cloud;
}

SplatCloud scatter_box_cloud(const Aabb& bounds, size_t count, int sh_order, uint64_t seed) {
  require(count >= 1, "scatter_box_cloud needs count >= 1");
  const Vec3 extent = bounds.max - bounds.min;
  require(extent.minCoeff() > 0.0, "scatter bounds must be nonempty");
  Rng rng(seed);
  SplatCloud cloud;
  cloud.sh_order = sh_order;
  const double spacing =
      std::cbrt(extent.x() * extent.y() * extent.z() / static_cast<double>(count));
  for (size_t i = 0; i < count; ++i) {
    Splat s;
    for (int k = 0; k < 3; ++k) s.mean[k] = bounds.min[k] + extent[k] * rng.uniform();
    s.scale = Vec3::Constant(0.8 * spacing);
    s.opacity = 0.5;
    Vec3 rgb;
    for (int ch = 0; ch < 3; ++ch) rgb[ch] = std::clamp(0.5 + 0.1 * rng.normal(), 0.0, 1.0);
    s.color = ShColor::constant(sh_order, rgb);
    cloud.splats.push_back(std::move(s));
  }
  return cloud;
}

nlohmann::json report_to_json(const TrainReport& report, int iterations) {
  nlohmann::json checkpoints = nlohmann::json::array();
  for (const Checkpoint& cp : report.checkpoints) {
    checkpoints.push_back(nlohmann::json{{"iteration", cp.iteration},
                                         {"loss", cp.mean_loss},
                                         {"ssim", cp.mean_ssim},
                                         {"seconds", cp.seconds}});
  }
  return nlohmann::json{{"iterations", iterations},
                        {"checkpoints", std::move(checkpoints)},
                        {"wall_seconds", report.wall_seconds}};
}

void save_train_report(const TrainReport& report, int iterations, const std::string& path,
                       const nlohmann::json& extra) {
  nlohmann::json doc = extra;
  doc.update(report_to_json(report, iterations));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace splatcamo
