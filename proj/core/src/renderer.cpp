#include "splatcamo/renderer.hpp"

#include <algorithm>
#include <cmath>

namespace splatcamo {

Vec3 splat_view_color(const Splat& splat, const Vec3& camera_position) {
  return eval_sh_color(splat.color, (splat.mean - camera_position).normalized());
}

namespace {

std::vector<SplatProjection> project_cloud(const SplatCloud& cloud, const CameraPose& pose) {
  const Mat3 world_to_cam = pose.world_to_camera();
  const double f = pose.intrinsics.focal_px;
  const int w = pose.intrinsics.width;
  const int h = pose.intrinsics.height;

  std::vector<SplatProjection> projections;
  projections.reserve(cloud.splats.size());
  for (size_t i = 0; i < cloud.splats.size(); ++i) {
    const Splat& s = cloud.splats[i];
    const Vec3 t = world_to_cam * (s.mean - pose.position);
    if (t.z() <= kNearPlane) continue;  // behind the camera

    SplatProjection p;
    p.splat_index = static_cast<int>(i);
    p.depth = t.z();
    p.t_cam = t;
    p.center = Vec2(pose.intrinsics.cx + f * t.x() / t.z(),
                    pose.intrinsics.cy - f * t.y() / t.z());

    // Local affine approximation of the pinhole map at the splat center.
    Eigen::Matrix<double, 2, 3> jac;
    const double z2 = t.z() * t.z();
    jac << f / t.z(), 0.0, -f * t.x() / z2,
           0.0, -f / t.z(), f * t.y() / z2;
    p.jacobian = jac;

    const Eigen::Matrix<double, 2, 3> a = jac * world_to_cam;
    p.cov = a * s.covariance() * a.transpose();
    p.cov(0, 0) += kCovarianceDilation;
    p.cov(1, 1) += kCovarianceDilation;

    const double det = p.cov.determinant();
    if (det <= 0.0 || !std::isfinite(det)) continue;
    p.cov_inv << p.cov(1, 1) / det, -p.cov(0, 1) / det, -p.cov(1, 0) / det, p.cov(0, 0) / det;

    const Vec3 offset = s.mean - pose.position;
    p.view_dist = offset.norm();
    p.view_dir = offset / p.view_dist;
    const Eigen::VectorXd basis = eval_sh_basis(p.view_dir, s.color.order);
    const Vec3 pre = s.color.coeffs * basis + Vec3::Constant(0.5);
    for (int ch = 0; ch < 3; ++ch) {
      p.color[ch] = std::max(pre[ch], 0.0);
      p.color_clamped[ch] = pre[ch] < 0.0 ? 1 : 0;
    }

    // 3-sigma ellipse bounding box, clipped to the image.
    const double rx = 3.0 * std::sqrt(p.cov(0, 0));
    const double ry = 3.0 * std::sqrt(p.cov(1, 1));
    p.px0 = std::max(0, static_cast<int>(std::floor(p.center.x() - rx)));
    p.px1 = std::min(w, static_cast<int>(std::ceil(p.center.x() + rx)) + 1);
    p.py0 = std::max(0, static_cast<int>(std::floor(p.center.y() - ry)));
    p.py1 = std::min(h, static_cast<int>(std::ceil(p.center.y() + ry)) + 1);
    if (p.px0 >= p.px1 || p.py0 >= p.py1) continue;

    projections.push_back(std::move(p));
  }

  // Front-to-back; ties broken by splat index for determinism.
  std::sort(projections.begin(), projections.end(),
            [](const SplatProjection& a, const SplatProjection& b) {
              if (a.depth != b.depth) return a.depth < b.depth;
              return a.splat_index < b.splat_index;
            });
  return projections;
}

}  // namespace

RenderedView render(const SplatCloud& cloud, const CameraPose& pose, const Vec3& background,
                    const RenderOptions& options, ForwardCapture* capture) {
  cloud.validate();
  pose.validate();

  const int w = pose.intrinsics.width;
  const int h = pose.intrinsics.height;
  const std::vector<SplatProjection> projections = project_cloud(cloud, pose);

  // Row buckets preserve the global depth order, so per-pixel compositing is
  // independent of how rows are scheduled across threads.
  std::vector<std::vector<int>> rows(h);
  for (size_t pi = 0; pi < projections.size(); ++pi) {
    const SplatProjection& p = projections[pi];
    for (int y = p.py0; y < p.py1; ++y) rows[y].push_back(static_cast<int>(pi));
  }

  RenderedView view;
  view.pose = pose;
  view.image = Image(w, h);
  view.alpha.assign(static_cast<size_t>(w) * h, 0.0);

  if (capture) {
    capture->projections = projections;
    capture->pixels.assign(static_cast<size_t>(w) * h, {});
    capture->trans_final.assign(static_cast<size_t>(w) * h, 1.0);
    capture->raw = Image(w, h);
  }

  Image& out = view.image;
  parallel_for(0, h, options.threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 pix(x + 0.5, y + 0.5);
      Vec3 acc = Vec3::Zero();
      double trans = 1.0;
      std::vector<PixelContribution>* bucket =
          capture ? &capture->pixels[static_cast<size_t>(y) * w + x] : nullptr;
      for (const int pi : rows[y]) {
        const SplatProjection& p = projections[pi];
        if (x < p.px0 || x >= p.px1) continue;
        const Vec2 d = pix - p.center;
        const double m2 = d.dot(p.cov_inv * d);
        const double gauss = std::exp(-0.5 * m2);
        const double alpha = cloud.splats[p.splat_index].opacity * gauss;
        if (alpha <= 0.0) continue;
        if (bucket) bucket->push_back(PixelContribution{pi, gauss, alpha, trans});
        acc += trans * alpha * p.color;
        trans *= 1.0 - alpha;
        if (trans < kTransmittanceCutoff) break;
      }
      acc += trans * background;
      view.alpha[static_cast<size_t>(y) * w + x] = 1.0 - trans;
      if (capture) {
        capture->trans_final[static_cast<size_t>(y) * w + x] = trans;
        capture->raw.set_rgb(x, y, acc);
      }
      out.set_rgb(x, y, acc.cwiseMax(0.0).cwiseMin(1.0));
    }
  });

  return view;
}

PosedImageSet render_set(const SplatCloud& cloud, const std::vector<CameraPose>& poses,
                         const Vec3& background, const RenderOptions& options) {
  PosedImageSet set;
  for (size_t i = 0; i < poses.size(); ++i) {
    try {
      RenderedView v = render(cloud, poses[i], background, options);
      set.add(std::move(v.image), poses[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("render_set: view " + std::to_string(i) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace splatcamo
