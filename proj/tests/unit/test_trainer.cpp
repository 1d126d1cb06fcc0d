#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "splatcamo/trainer.hpp"

using namespace splatcamo;

namespace {

SplatCloud random_scene(int n, uint64_t seed, int order = 2) {
  Rng rng(seed);
  SplatCloud cloud;
  cloud.sh_order = order;
  for (int i = 0; i < n; ++i) {
    Splat s;
    s.mean = Vec3(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    s.scale = Vec3(rng.uniform(0.12, 0.35), rng.uniform(0.12, 0.35), rng.uniform(0.12, 0.35));
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    s.rotation = q / q.norm();
    s.opacity = rng.uniform(0.3, 0.7);
    s.color = ShColor::zeros(order);
    // Coefficients sized so decoded colors stay away from the clamp kinks,
    // where central differences are meaningless.
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 0; k < s.color.coeffs.cols(); ++k)
        s.color.coeffs(ch, k) = (k == 0 ? 0.15 : 0.08) * rng.normal();
    cloud.splats.push_back(std::move(s));
  }
  return cloud;
}

CameraPose front_pose(int size = 24, double focal = 30.0) {
  Intrinsics intr{focal, size / 2.0, size / 2.0, size, size};
  return CameraPose::look_at(Vec3(0.2, 0.3, 3.5), Vec3(0, 0, 0), intr);
}

struct FdStats {
  int total = 0;
  int passed = 0;
  double pass_rate() const { return total == 0 ? 1.0 : static_cast<double>(passed) / total; }
};

void fd_check(double analytic, double loss_plus, double loss_minus, double step, FdStats& stats) {
  const double fd = (loss_plus - loss_minus) / (2.0 * step);
  const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
  stats.total += 1;
  if (std::abs(fd - analytic) / denom <= 1e-3) stats.passed += 1;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences on random 5-splat scenes") {
  const CameraPose pose = front_pose();
  const double lambda = 0.2;
  const Vec3 bg(0.5, 0.5, 0.5);
  const double step = 1e-4;

  FdStats sh_stats, opacity_stats, mean_stats, scale_stats;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    SplatCloud cloud = random_scene(5, seed);
    const Image target = render(random_scene(5, seed + 100), pose, bg).image;

    SceneGradients grads;
    loss_and_gradients(cloud, target, pose, lambda, bg, &grads);

    const auto loss_at = [&](const SplatCloud& c) {
      return loss_and_gradients(c, target, pose, lambda, bg, nullptr);
    };

    for (size_t si = 0; si < cloud.size(); ++si) {
      for (int ch = 0; ch < 3; ++ch) {
        for (int k = 0; k < cloud.splats[si].color.coeffs.cols(); ++k) {
          SplatCloud c = cloud;
          c.splats[si].color.coeffs(ch, k) += step;
          const double plus = loss_at(c);
          c.splats[si].color.coeffs(ch, k) -= 2 * step;
          const double minus = loss_at(c);
          fd_check(grads.sh[si](ch, k), plus, minus, step, sh_stats);
        }
      }
      {
        SplatCloud c = cloud;
        c.splats[si].opacity += step;
        const double plus = loss_at(c);
        c.splats[si].opacity -= 2 * step;
        const double minus = loss_at(c);
        fd_check(grads.opacity[si], plus, minus, step, opacity_stats);
      }
      // Geometry parameters move the 3-sigma rasterization footprint, a
      // genuine discontinuity; the smaller step keeps central differences
      // inside the smooth region almost everywhere.
      const double gstep = 1e-5;
      for (int k = 0; k < 3; ++k) {
        SplatCloud c = cloud;
        c.splats[si].mean[k] += gstep;
        const double plus = loss_at(c);
        c.splats[si].mean[k] -= 2 * gstep;
        const double minus = loss_at(c);
        fd_check(grads.means[si][k], plus, minus, gstep, mean_stats);
      }
      for (int k = 0; k < 3; ++k) {
        SplatCloud c = cloud;
        c.splats[si].scale[k] += gstep;
        const double plus = loss_at(c);
        c.splats[si].scale[k] -= 2 * gstep;
        const double minus = loss_at(c);
        fd_check(grads.scales[si][k], plus, minus, gstep, scale_stats);
      }
    }
  }
  // The SH and opacity gradients are the attack-critical path.
  CHECK(sh_stats.pass_rate() >= 0.99);
  CHECK(opacity_stats.pass_rate() >= 0.99);
  CHECK(mean_stats.pass_rate() >= 0.97);
  CHECK(scale_stats.pass_rate() >= 0.97);
  CHECK(sh_stats.total == 5 * 5 * 27);
}

TEST_CASE("self-rendered targets are a fixed point of training") {
  const SplatCloud cloud = random_scene(6, 9);
  TrainConfig cfg;
  cfg.iterations = 5;
  cfg.batch_size = 2;
  cfg.background = Vec3(0.5, 0.5, 0.5);
  cfg.checkpoint_interval = 5;
  cfg.threads = 1;

  PosedImageSet data;
  Intrinsics intr{30, 12, 12, 24, 24};
  for (int i = 0; i < 3; ++i) {
    const CameraPose pose =
        CameraPose::look_at(Vec3(3.5 * std::cos(i * 1.1), 1.0, 3.5 * std::sin(i * 1.1)),
                            Vec3(0, 0, 0), intr);
    data.add(render(cloud, pose, cfg.background).image, pose);
  }

  const auto [trained, report] = train(cloud, data, cfg);
  CHECK(report.checkpoints.front().mean_loss == 0.0);
  CHECK(report.checkpoints.front().mean_ssim == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK((trained.splats[i].color.coeffs - cloud.splats[i].color.coeffs).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK(std::abs(trained.splats[i].opacity - cloud.splats[i].opacity) <= 1e-12);
    CHECK(trained.splats[i].mean == cloud.splats[i].mean);
    CHECK(trained.splats[i].scale == cloud.splats[i].scale);
  }
}

TEST_CASE("single splat on a constant target converges below 1/255 L1 in 500 steps") {
  SplatCloud cloud;
  cloud.sh_order = 0;
  Splat s;
  s.mean = Vec3(0, 0, 0);
  s.scale = Vec3(0.5, 0.5, 0.5);
  s.opacity = 0.9;
  s.color = ShColor::constant(0, Vec3(0.2, 0.2, 0.7));  // start far from the target
  cloud.splats.push_back(s);

  const Vec3 target_color(0.65, 0.4, 0.3);
  TrainConfig cfg;
  cfg.iterations = 500;
  cfg.batch_size = 1;
  cfg.background = target_color;  // blob edges blend into the target
  cfg.checkpoint_interval = 100;
  cfg.threads = 1;

  PosedImageSet data;
  Intrinsics intr{30, 12, 12, 24, 24};
  const CameraPose pose = CameraPose::look_at(Vec3(0, 0, 3), Vec3(0, 0, 0), intr);
  data.add(Image(24, 24, target_color), pose);

  const auto [trained, report] = train(cloud, data, cfg);
  const Image got = render(trained, pose, cfg.background).image;
  double l1 = 0.0;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x)
      for (int ch = 0; ch < 3; ++ch) l1 += std::abs(got.pixel(x, y)[ch] - target_color[ch]);
  l1 /= 3.0 * 24 * 24;
  CHECK(l1 < 1.0 / 255.0);
}

TEST_CASE("training is bit-deterministic for a fixed seed, any thread count") {
  const SplatCloud initial = random_scene(8, 21, 1);
  PosedImageSet data;
  Intrinsics intr{20, 8, 8, 16, 16};
  const SplatCloud target_scene = random_scene(8, 22, 1);
  for (int i = 0; i < 4; ++i) {
    const CameraPose pose =
        CameraPose::look_at(Vec3(3 * std::cos(i * 1.6), 0.8, 3 * std::sin(i * 1.6)),
                            Vec3(0, 0, 0), intr);
    data.add(render(target_scene, pose, Vec3(0.5, 0.5, 0.5)).image, pose);
  }

  TrainConfig cfg;
  cfg.iterations = 40;
  cfg.batch_size = 2;
  cfg.seed = 77;
  cfg.background = Vec3(0.5, 0.5, 0.5);
  cfg.checkpoint_interval = 20;

  cfg.threads = 1;
  const auto [cloud_a, report_a] = train(initial, data, cfg);
  const auto [cloud_b, report_b] = train(initial, data, cfg);
  cfg.threads = 3;
  const auto [cloud_c, report_c] = train(initial, data, cfg);

  for (size_t i = 0; i < cloud_a.size(); ++i) {
    CHECK(cloud_a.splats[i].color.coeffs == cloud_b.splats[i].color.coeffs);
    CHECK(cloud_a.splats[i].opacity == cloud_b.splats[i].opacity);
    CHECK(cloud_a.splats[i].color.coeffs == cloud_c.splats[i].color.coeffs);
    CHECK(cloud_a.splats[i].opacity == cloud_c.splats[i].opacity);
  }
  CHECK(report_a.checkpoints.back().mean_loss == report_b.checkpoints.back().mean_loss);
  CHECK(report_a.checkpoints.back().mean_loss == report_c.checkpoints.back().mean_loss);
}

TEST_CASE("opacity stays inside [0,1] under an aggressive learning rate") {
  const SplatCloud initial = random_scene(5, 33, 0);
  PosedImageSet data;
  Intrinsics intr{20, 8, 8, 16, 16};
  const CameraPose pose = CameraPose::look_at(Vec3(0, 1, 3), Vec3(0, 0, 0), intr);
  data.add(Image(16, 16, Vec3(0, 0, 0)), pose);  // black target pushes opacity hard

  TrainConfig cfg;
  cfg.iterations = 120;
  cfg.lr_opacity = 5.0;
  cfg.batch_size = 1;
  cfg.checkpoint_interval = 10;
  cfg.threads = 1;
  const auto [trained, report] = train(initial, data, cfg);
  for (const Splat& s : trained.splats) {
    CHECK(s.opacity >= 0.0);
    CHECK(s.opacity <= 1.0);
  }
}

TEST_CASE("untrained parameter blocks stay bit-identical") {
  const SplatCloud initial = random_scene(4, 41);
  PosedImageSet data;
  Intrinsics intr{20, 8, 8, 16, 16};
  const CameraPose pose = CameraPose::look_at(Vec3(0, 0.5, 3), Vec3(0, 0, 0), intr);
  data.add(render(random_scene(4, 42), pose, Vec3(0.5, 0.5, 0.5)).image, pose);

  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.batch_size = 1;
  cfg.checkpoint_interval = 10;
  cfg.threads = 1;
  cfg.trainable.sh = false;  // only opacity moves
  const auto [trained, report] = train(initial, data, cfg);
  for (size_t i = 0; i < initial.size(); ++i) {
    CHECK(trained.splats[i].color.coeffs == initial.splats[i].color.coeffs);
    CHECK(trained.splats[i].mean == initial.splats[i].mean);
    CHECK(trained.splats[i].scale == initial.splats[i].scale);
    CHECK(trained.splats[i].rotation == initial.splats[i].rotation);
  }
}

TEST_CASE("non-finite loss aborts with iteration and view context") {
  const SplatCloud initial = random_scene(3, 51);
  PosedImageSet data;
  Intrinsics intr{20, 8, 8, 16, 16};
  const CameraPose pose = CameraPose::look_at(Vec3(0, 0.5, 3), Vec3(0, 0, 0), intr);
  Image bad(16, 16, Vec3(0.5, 0.5, 0.5));
  bad.pixel(4, 4)[1] = std::numeric_limits<double>::quiet_NaN();
  data.add(std::move(bad), pose, "poisoned_nan.png");

  TrainConfig cfg;
  cfg.iterations = 3;
  cfg.batch_size = 1;
  cfg.threads = 1;
  try {
    train(initial, data, cfg);
    FAIL("expected non-finite loss abort");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("iteration 1") != std::string::npos);
    CHECK(msg.find("poisoned_nan.png") != std::string::npos);
  }
}

TEST_CASE("time_to_ssim finds the first crossing checkpoint") {
  TrainReport report;
  report.checkpoints = {
      {0, 0.5, 0.40, 0.1}, {10, 0.4, 0.80, 1.0}, {20, 0.3, 0.93, 2.0},
      {30, 0.2, 0.96, 3.5}, {40, 0.1, 0.97, 4.0},
  };
  const auto t = time_to_ssim(report, 0.95);
  REQUIRE(t.has_value());
  CHECK(*t == 3.5);  // checkpoint 3 crosses first
  CHECK_FALSE(time_to_ssim(report, 1.01).has_value());
  TrainReport empty;
  CHECK_THROWS(time_to_ssim(empty, 0.5));
}

TEST_CASE("geometry-based initialization perturbs only colors") {
  const SplatCloud gt = random_scene(10, 61, 2);
  const SplatCloud init = init_from_geometry(gt, 0.3, 5);
  REQUIRE(init.size() == gt.size());
  bool any_color_changed = false;
  for (size_t i = 0; i < gt.size(); ++i) {
    CHECK(init.splats[i].mean == gt.splats[i].mean);
    CHECK(init.splats[i].scale == gt.splats[i].scale);
    CHECK(init.splats[i].rotation == gt.splats[i].rotation);
    CHECK(init.splats[i].opacity == gt.splats[i].opacity);
    if (init.splats[i].color.coeffs != gt.splats[i].color.coeffs) any_color_changed = true;
    // Higher bands are dropped by the initializer.
    for (int k = 1; k < init.splats[i].color.coeffs.cols(); ++k) {
      CHECK(init.splats[i].color.coeffs(0, k) == 0.0);
    }
  }
  CHECK(any_color_changed);
}

TEST_CASE("box scatter produces a valid cloud") {
  const SplatCloud cloud = scatter_box_cloud(Aabb{Vec3(-1, 0, -1), Vec3(1, 1, 1)}, 64, 2, 3);
  CHECK(cloud.size() == 64);
  CHECK_NOTHROW(cloud.validate());
  for (const Splat& s : cloud.splats) {
    CHECK(s.mean.x() >= -1.0);
    CHECK(s.mean.x() <= 1.0);
    CHECK(s.mean.y() >= 0.0);
  }
}

TEST_CASE("checkpoint clouds are saved in the cloud binary format") {
  namespace fs = std::filesystem;
  const SplatCloud initial = random_scene(4, 71, 1);
  PosedImageSet data;
  Intrinsics intr{20, 8, 8, 16, 16};
  const CameraPose pose = CameraPose::look_at(Vec3(0, 1, 3), Vec3(0, 0, 0), intr);
  data.add(render(random_scene(4, 72, 1), pose, Vec3(0.5, 0.5, 0.5)).image, pose);

  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.batch_size = 1;
  cfg.checkpoint_interval = 10;
  cfg.threads = 1;
  cfg.checkpoint_dir = (fs::temp_directory_path() / "splatcamo_ckpts").string();
  fs::remove_all(cfg.checkpoint_dir);
  fs::create_directories(cfg.checkpoint_dir);
  const auto [trained, report] = train(initial, data, cfg);
  CHECK(fs::exists(cfg.checkpoint_dir + "/cloud_000010.bin"));
  CHECK(fs::exists(cfg.checkpoint_dir + "/cloud_000020.bin"));
  const SplatCloud final_ckpt = load_cloud(cfg.checkpoint_dir + "/cloud_000020.bin");
  CHECK(final_ckpt.size() == trained.size());
  for (size_t i = 0; i < trained.size(); ++i) {
    CHECK(final_ckpt.splats[i].color.coeffs == trained.splats[i].color.coeffs);
  }
  fs::remove_all(cfg.checkpoint_dir);
}
