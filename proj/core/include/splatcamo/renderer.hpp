#pragma once

#include <vector>

#include "splatcamo/scene.hpp"

namespace splatcamo {

/// Rendered raster plus the per-pixel accumulated alpha (1 - remaining
/// transmittance). Channel values are clamped to [0, 1].
struct RenderedView {
  Image image;
  CameraPose pose;
  std::vector<double> alpha;  // row-major, size width*height

  double alpha_at(int x, int y) const {
    return alpha[static_cast<size_t>(y) * image.width() + x];
  }
};

struct RenderOptions {
  int threads = 0;  // 0 = hardware concurrency; results are thread-count invariant
};

/// Compositing stops once remaining transmittance drops below this.
inline constexpr double kTransmittanceCutoff = 1e-4;
/// Antialiasing floor added to the projected covariance diagonal (px^2).
inline constexpr double kCovarianceDilation = 0.3;

/// SH color of a splat as seen from a camera position: the view direction is
/// camera position -> splat mean (distinct from the optical axis used for
/// viewpoint-region membership).
Vec3 splat_view_color(const Splat& splat, const Vec3& camera_position);

// --- training support -------------------------------------------------------
// The trainer re-uses the renderer's forward pass and needs its intermediates.

struct SplatProjection {
  int splat_index = 0;
  double depth = 0.0;
  Vec2 center = Vec2::Zero();            // projected mean, pixels
  Mat2 cov = Mat2::Zero();               // dilated screen-space covariance
  Mat2 cov_inv = Mat2::Zero();
  Vec3 color = Vec3::Zero();             // decoded RGB for this view
  Eigen::Vector3i color_clamped{0, 0, 0};  // 1 where the decode's lower clamp hit
  Vec3 view_dir = Vec3::Zero();
  double view_dist = 0.0;
  Vec3 t_cam = Vec3::Zero();             // camera-space mean
  Eigen::Matrix<double, 2, 3> jacobian = Eigen::Matrix<double, 2, 3>::Zero();
  int px0 = 0, px1 = 0, py0 = 0, py1 = 0;  // half-open pixel bounds of the 3-sigma box
};

struct PixelContribution {
  int proj = 0;          // index into ForwardCapture::projections
  double gauss = 0.0;    // exp(-0.5 * mahalanobis^2)
  double alpha = 0.0;
  double trans_before = 0.0;  // transmittance in front of this splat
};

struct ForwardCapture {
  std::vector<SplatProjection> projections;             // depth-sorted, visible only
  std::vector<std::vector<PixelContribution>> pixels;   // row-major per pixel
  std::vector<double> trans_final;                      // per-pixel remaining transmittance
  Image raw;                                            // composited image before clamping
};

/// Forward splatting: per-splat SH color from the view direction, local
/// affine (Jacobian) projection of each 3D Gaussian to screen space,
/// front-to-back alpha compositing in depth order, remaining transmittance
/// multiplied into the background. Splats behind the camera are skipped.
RenderedView render(const SplatCloud& cloud, const CameraPose& pose, const Vec3& background,
                    const RenderOptions& options = {}, ForwardCapture* capture = nullptr);

/// Element-wise render; output order matches `poses`. Per-view failures are
/// rethrown with the view index.
PosedImageSet render_set(const SplatCloud& cloud, const std::vector<CameraPose>& poses,
                         const Vec3& background, const RenderOptions& options = {});

}  // namespace splatcamo
