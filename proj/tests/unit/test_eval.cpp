#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splatcamo/eval.hpp"
#include "splatcamo/renderer.hpp"
#include "splatcamo/synth.hpp"
#include "test_support.hpp"

using namespace splatcamo;

namespace {

std::string asr_text(double percent) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", percent);
  return buf;
}

Detection det(double x, double y, double w, double h, const std::string& klass, double conf) {
  return Detection{Box2D{x, y, w, h}, klass, conf};
}

}  // namespace

TEST_CASE("iou basics") {
  const Box2D a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box2D{20, 20, 5, 5}) == 0.0);
  // Unit squares offset by half a width: overlap 1/2, union 3/2.
  CHECK(iou(Box2D{0, 0, 1, 1}, Box2D{0.5, 0, 1, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou symmetry and scale invariance") {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const Box2D a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.1, 4), rng.uniform(0.1, 4)};
    const Box2D b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.1, 4), rng.uniform(0.1, 4)};
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    const double k = rng.uniform(0.5, 3.0);
    const Box2D ka{k * a.x, k * a.y, k * a.w, k * a.h};
    const Box2D kb{k * b.x, k * b.y, k * b.w, k * b.h};
    CHECK(iou(ka, kb) == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("asr reproduces the published arithmetic") {
  // Build a ground truth of N views; benign detects all of them, the
  // adversarial side misses exactly `successes`.
  const auto run = [](int successes, int total) {
    GroundTruth gt;
    DetectionSet benign, adversarial;
    for (int i = 0; i < total; ++i) {
      const std::string key = "v" + std::to_string(i) + ".png";
      gt[key] = {"car", Box2D{10, 10, 20, 20}};
      benign[key] = {det(10, 10, 20, 20, "car", 0.9)};
      adversarial[key] =
          i < successes ? std::vector<Detection>{} : benign[key];
    }
    return compute_asr(benign, adversarial, gt, "car", 0.5);
  };

  const AsrResult car_grass = run(49, 50);
  CHECK(car_grass.successes == 49);
  CHECK(car_grass.total == 50);
  CHECK(asr_text(car_grass.asr_percent) == "98.00");

  const AsrResult real_world = run(24, 129);
  CHECK(asr_text(real_world.asr_percent) == "18.60");

  const AsrResult none = run(0, 10);
  CHECK(none.asr_percent == 0.0);
}

TEST_CASE("asr of identical detection sets is exactly zero") {
  Rng rng(5);
  GroundTruth gt;
  DetectionSet dets;
  for (int i = 0; i < 23; ++i) {
    const std::string key = "v" + std::to_string(i) + ".png";
    gt[key] = {"car", Box2D{5, 5, 12, 9}};
    std::vector<Detection> list;
    if (rng.uniform() < 0.8) list.push_back(det(5.5, 5.2, 12, 9, "car", rng.uniform(0.5, 1.0)));
    if (rng.uniform() < 0.3) list.push_back(det(1, 1, 4, 4, "grass", 0.7));
    dets[key] = list;
  }
  const AsrResult r = compute_asr(dets, dets, gt, "car", 0.5);
  CHECK(r.successes == 0);
  CHECK(r.asr_percent == 0.0);
}

TEST_CASE("asr with zero benign detections is undefined") {
  GroundTruth gt{{"v0.png", {"car", Box2D{0, 0, 10, 10}}}};
  DetectionSet empty{{"v0.png", {}}};
  CHECK_THROWS_AS(compute_asr(empty, empty, gt, "car", 0.5), std::runtime_error);
}

TEST_CASE("asr respects the confidence floor") {
  GroundTruth gt{{"v0.png", {"car", Box2D{0, 0, 10, 10}}},
                 {"v1.png", {"car", Box2D{0, 0, 10, 10}}}};
  DetectionSet benign{{"v0.png", {det(0, 0, 10, 10, "car", 0.9)}},
                      {"v1.png", {det(0, 0, 10, 10, "car", 0.4)}}};  // below floor
  DetectionSet adv{{"v0.png", {}}, {"v1.png", {}}};
  const AsrResult r = compute_asr(benign, adv, gt, "car", 0.5);
  CHECK(r.total == 1);  // v1 never counted
  CHECK(r.successes == 1);
}

TEST_CASE("perfect detector scores AP = AR = 1, misses score 0") {
  GroundTruth gt;
  DetectionSet perfect, misses;
  for (int i = 0; i < 12; ++i) {
    const std::string key = "v" + std::to_string(i) + ".png";
    gt[key] = {"car", Box2D{8, 8, 16, 12}};
    perfect[key] = {det(8, 8, 16, 12, "car", 1.0)};
    misses[key] = {};
  }
  const ApAr p = compute_ap_ar(perfect, gt, "car");
  CHECK(p.ap == 1.0);
  CHECK(p.ar == 1.0);
  const ApAr m = compute_ap_ar(misses, gt, "car");
  CHECK(m.ap == 0.0);
  CHECK(m.ar == 0.0);
}

TEST_CASE("3-view toy case with a leading false positive matches the oracle") {
  GroundTruth gt;
  for (int i = 0; i < 3; ++i) {
    gt["v" + std::to_string(i) + ".png"] = {"car", Box2D{10, 10, 10, 10}};
  }
  DetectionSet dets;
  dets["v0.png"] = {det(40, 40, 10, 10, "car", 0.95)};  // FP ranked first
  dets["v1.png"] = {det(10, 10, 10, 10, "car", 0.8)};   // TP
  dets["v2.png"] = {det(11, 10, 10, 10, "car", 0.6)};   // TP
  const ApAr got = compute_ap_ar(dets, gt, "car", 0.5);

  std::vector<test_support::OracleDet> oracle_dets{
      {0.95, "v0.png", Box2D{40, 40, 10, 10}},
      {0.8, "v1.png", Box2D{10, 10, 10, 10}},
      {0.6, "v2.png", Box2D{11, 10, 10, 10}},
  };
  std::map<std::string, Box2D> oracle_gt{{"v0.png", Box2D{10, 10, 10, 10}},
                                         {"v1.png", Box2D{10, 10, 10, 10}},
                                         {"v2.png", Box2D{10, 10, 10, 10}}};
  const auto [oracle_ap, oracle_ar] = test_support::brute_force_ap_ar(oracle_dets, oracle_gt, 0.5);
  CHECK(got.ap == doctest::Approx(oracle_ap).epsilon(1e-12));
  CHECK(got.ar == doctest::Approx(oracle_ar).epsilon(1e-12));
  // Hand arithmetic: ranked FP,TP,TP -> precisions 0, 1/2, 2/3 at recalls
  // 0, 1/3, 2/3; envelope precision at both recall steps is 2/3.
  CHECK(got.ap == doctest::Approx(2.0 / 3.0 * 2.0 / 3.0).epsilon(1e-12));
  CHECK(got.ar == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ap/ar matches brute-force PR enumeration on 1000 random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_views = 1 + static_cast<int>(rng.uniform_int(10));
    GroundTruth gt;
    std::map<std::string, Box2D> oracle_gt;
    DetectionSet dets;
    std::vector<test_support::OracleDet> oracle_dets;
    for (int v = 0; v < n_views; ++v) {
      const std::string key = "v" + std::to_string(v) + ".png";
      const Box2D box{rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(4, 14),
                      rng.uniform(4, 14)};
      gt[key] = {"car", box};
      oracle_gt[key] = box;
      std::vector<Detection> list;
      const int n_dets = static_cast<int>(rng.uniform_int(4));
      for (int d = 0; d < n_dets; ++d) {
        // Half-ish of the detections land near the truth, the rest anywhere.
        Box2D db;
        if (rng.uniform() < 0.5) {
          db = Box2D{box.x + rng.uniform(-3, 3), box.y + rng.uniform(-3, 3),
                     box.w * rng.uniform(0.7, 1.3), box.h * rng.uniform(0.7, 1.3)};
        } else {
          db = Box2D{rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform(2, 10),
                     rng.uniform(2, 10)};
        }
        const double conf = rng.uniform();
        list.push_back(Detection{db, "car", conf});
        oracle_dets.push_back({conf, key, db});
      }
      dets[key] = list;
    }
    const ApAr got = compute_ap_ar(dets, gt, "car", 0.5);
    const auto [oracle_ap, oracle_ar] =
        test_support::brute_force_ap_ar(oracle_dets, oracle_gt, 0.5);
    REQUIRE(got.ap == doctest::Approx(oracle_ap).epsilon(1e-12));
    REQUIRE(got.ar == doctest::Approx(oracle_ar).epsilon(1e-12));
    REQUIRE(got.ap >= 0.0);
    REQUIRE(got.ap <= 1.0);
    REQUIRE(got.ar >= 0.0);
    REQUIRE(got.ar <= 1.0);
  }
}

TEST_CASE("demoting a true positive below all false positives never raises AP") {
  GroundTruth gt;
  for (int i = 0; i < 4; ++i) gt["v" + std::to_string(i) + ".png"] = {"car", Box2D{0, 0, 10, 10}};
  DetectionSet dets;
  dets["v0.png"] = {det(0, 0, 10, 10, "car", 0.9)};   // TP
  dets["v1.png"] = {det(50, 50, 5, 5, "car", 0.7)};   // FP
  dets["v2.png"] = {det(0, 0, 10, 10, "car", 0.6)};   // TP
  const double before = compute_ap_ar(dets, gt, "car").ap;
  dets["v0.png"][0].confidence = 0.1;  // now ranked below every FP
  const double after = compute_ap_ar(dets, gt, "car").ap;
  CHECK(after <= before);
}

TEST_CASE("delta_ap reproduces published rows to 3 decimals") {
  {
    const auto [dap, dar] = delta_ap(ApAr{0.792, 0.797}, ApAr{0.733, 0.738});
    CHECK(dap == doctest::Approx(-0.059).epsilon(1e-12));
    CHECK(dar == doctest::Approx(-0.059).epsilon(1e-12));
  }
  {
    const auto [dap, dar] = delta_ap(ApAr{0.218, 0.214}, ApAr{0.033, 0.031});
    CHECK(dap == doctest::Approx(-0.185).epsilon(1e-12));
    CHECK(dar == doctest::Approx(-0.183).epsilon(1e-12));
  }
  {
    const auto [dap, dar] = delta_ap(ApAr{0.41, 0.3}, ApAr{0.41, 0.3});
    CHECK(dap == 0.000);
    CHECK(dar == 0.000);
  }
}

TEST_CASE("toy detector finds the blue car from a side pose") {
  SceneSpec scene;
  scene.ground_extent = 6.0;
  scene.density = 80.0;
  scene.seed = 9;
  const SplatCloud cloud = build_scene(scene, TextureBinding::uniform("car-blue"));
  const CameraPose pose = CameraPose::look_at(scene.target_center + Vec3(3.5, 1.2, 0.3),
                                              scene.target_center,
                                              Intrinsics{80, 32, 32, 64, 64});
  const Image view = render(cloud, pose, Vec3(0.7, 0.8, 0.9)).image;
  const auto dets = toy_detect(view, default_toy_detector());
  const auto gt_box = object_bbox(pose, scene.target_aabb());
  REQUIRE(gt_box.has_value());
  bool found = false;
  for (const Detection& d : dets) {
    if (d.klass == "car" && iou(d.bbox, *gt_box) >= 0.5 && d.confidence >= 0.5) found = true;
  }
  CHECK(found);
}

TEST_CASE("uniform background yields no detections") {
  const Image blank(64, 64, Vec3(0.7, 0.8, 0.9));
  CHECK(toy_detect(blank, default_toy_detector()).empty());
}

TEST_CASE("toy detector is deterministic and honors min_area") {
  Image img(64, 64, Vec3(0.7, 0.8, 0.9));
  for (int y = 20; y < 40; ++y)
    for (int x = 10; x < 42; ++x) img.set_rgb(x, y, Vec3(0.10, 0.20, 0.80));
  // A tiny smudge below the area cutoff.
  img.set_rgb(55, 55, Vec3(0.10, 0.20, 0.80));
  ToyDetectorConfig cfg = default_toy_detector();
  cfg.min_area = 20;
  const auto a = toy_detect(img, cfg);
  const auto b = toy_detect(img, cfg);
  REQUIRE(a.size() == 1);
  CHECK(a[0].klass == "car");
  CHECK(a[0].bbox.x == 10.0);
  CHECK(a[0].bbox.y == 20.0);
  CHECK(a[0].bbox.w == 32.0);
  CHECK(a[0].bbox.h == 20.0);
  CHECK(a[0].confidence > 0.9);
  CHECK(b.size() == a.size());
  CHECK(b[0].confidence == a[0].confidence);
}

TEST_CASE("classify_region separates road from grass patches") {
  Image img(64, 64, Vec3(0.7, 0.8, 0.9));
  for (int y = 8; y < 28; ++y)
    for (int x = 8; x < 28; ++x) img.set_rgb(x, y, Vec3(0.42, 0.42, 0.42));
  for (int y = 36; y < 56; ++y)
    for (int x = 36; x < 56; ++x) img.set_rgb(x, y, Vec3(0.15, 0.5, 0.15));
  const auto cfg = default_toy_detector();
  CHECK(classify_region(img, Box2D{8, 8, 20, 20}, cfg).first == "road");
  CHECK(classify_region(img, Box2D{36, 36, 20, 20}, cfg).first == "grass");
}

TEST_CASE("detections wire format round trips with the exact schema") {
  DetectionSet dets;
  dets["view_0001.png"] = {det(1.5, 2.25, 10, 8, "car", 0.875), det(30, 40, 5, 6, "road", 0.5)};
  dets["view_0002.png"] = {};
  const std::string path =
      (std::filesystem::temp_directory_path() / "splatcamo_dets.json").string();
  save_detections(dets, path);

  std::ifstream in(path);
  nlohmann::json doc;
  in >> doc;
  REQUIRE(doc.contains("view_0001.png"));
  REQUIRE(doc.contains("view_0002.png"));
  const auto& first = doc["view_0001.png"][0];
  CHECK(first.contains("bbox"));
  CHECK(first.contains("class"));
  CHECK(first.contains("confidence"));
  CHECK(first["bbox"].size() == 4);

  const DetectionSet loaded = load_detections(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("view_0001.png").size() == 2);
  CHECK(loaded.at("view_0001.png")[0].bbox.x == 1.5);
  CHECK(loaded.at("view_0001.png")[0].klass == "car");
  CHECK(loaded.at("view_0001.png")[0].confidence == 0.875);
  CHECK(loaded.at("view_0002.png").empty());
  std::filesystem::remove(path);
}

TEST_CASE("malformed detections document is a parse error") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "splatcamo_bad_dets.json").string();
  std::ofstream(path) << "[1, 2,";
  CHECK_THROWS_AS(load_detections(path), std::runtime_error);
  std::filesystem::remove(path);
}
