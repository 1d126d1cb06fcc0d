#include <benchmark/benchmark.h>

#include "splatcamo/attack.hpp"
#include "splatcamo/eval.hpp"
#include "splatcamo/ssim.hpp"
#include "splatcamo/trainer.hpp"

using namespace splatcamo;

namespace {

SplatCloud bench_scene(double density) {
  SceneSpec spec;
  spec.density = density;
  spec.seed = 3;
  return build_scene(spec, TextureBinding::uniform("car-blue"));
}

CameraPose bench_pose(int size) {
  Intrinsics intr{1.25 * size, size / 2.0, size / 2.0, size, size};
  return CameraPose::look_at(Vec3(2.5, 2.0, 2.5), Vec3(0, 0.4, 0), intr);
}

Image bench_image(int size, uint64_t seed) {
  Rng rng(seed);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      img.set_rgb(x, y, Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
  return img;
}

}  // namespace

static void BM_EvalShBasis(benchmark::State& state) {
  Rng rng(1);
  const Vec3 d = rng.unit_vector();
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_sh_basis(d, order));
  }
}
BENCHMARK(BM_EvalShBasis)->Arg(0)->Arg(1)->Arg(2);

static void BM_Render(benchmark::State& state) {
  const SplatCloud cloud = bench_scene(static_cast<double>(state.range(0)));
  const CameraPose pose = bench_pose(static_cast<int>(state.range(1)));
  RenderOptions opts;
  opts.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render(cloud, pose, Vec3(0.7, 0.8, 0.9), opts));
  }
  state.SetLabel(std::to_string(cloud.size()) + " splats");
}
BENCHMARK(BM_Render)->Args({30, 64})->Args({60, 64})->Args({60, 128});

static void BM_Ssim(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Image a = bench_image(size, 1);
  const Image b = bench_image(size, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ssim(a, b));
  }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(128);

static void BM_LossAndGradients(benchmark::State& state) {
  const SplatCloud cloud = bench_scene(30);
  const CameraPose pose = bench_pose(64);
  const Image target = bench_image(64, 5);
  SceneGradients grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_and_gradients(cloud, target, pose, 0.2, Vec3(0.7, 0.8, 0.9), &grads, 1));
  }
}
BENCHMARK(BM_LossAndGradients);

static void BM_RegionMembership(benchmark::State& state) {
  CaptureSpec capture;
  capture.view_count = 200;
  const auto poses = make_views(capture);
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{
      CameraPose::look_at(Vec3(0, 4.4, 0.4), Vec3(0, 0.4, 0), capture.intrinsics()), 35.0,
      "road"});
  for (auto _ : state) {
    int members = 0;
    for (const auto& pose : poses) members += region_of(pose, plan).has_value() ? 1 : 0;
    benchmark::DoNotOptimize(members);
  }
}
BENCHMARK(BM_RegionMembership);

static void BM_ToyDetect(benchmark::State& state) {
  const SplatCloud cloud = bench_scene(60);
  const Image img = render(cloud, bench_pose(64), Vec3(0.7, 0.8, 0.9)).image;
  const ToyDetectorConfig cfg = default_toy_detector();
  for (auto _ : state) {
    benchmark::DoNotOptimize(toy_detect(img, cfg));
  }
}
BENCHMARK(BM_ToyDetect);

BENCHMARK_MAIN();
