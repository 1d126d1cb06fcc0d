#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "splatcamo/attack.hpp"

using namespace splatcamo;

namespace {

CameraPose pose_with_forward(const Vec3& forward) {
  CameraPose pose;
  pose.position = Vec3(0, 0, 0);
  pose.forward = forward.normalized();
  Vec3 ref(0, 1, 0);
  if (std::abs(pose.forward.dot(ref)) > 1 - 1e-9) ref = Vec3(0, 0, 1);
  pose.up = (ref - pose.forward * pose.forward.dot(ref)).normalized();
  pose.intrinsics = Intrinsics{40, 16, 16, 32, 32};
  return pose;
}

CameraPose look_at_from(double azimuth_deg, double elevation_deg, double radius = 4.0,
                        const Vec3& target = Vec3(0, 0, 0)) {
  const double az = deg_to_rad(azimuth_deg), el = deg_to_rad(elevation_deg);
  const Vec3 eye =
      target + radius * Vec3(std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az));
  return CameraPose::look_at(eye, target, Intrinsics{40, 16, 16, 32, 32});
}

AttackPlan one_region(const CameraPose& reference, double delta, const std::string& id = "road") {
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{reference, delta, id});
  return plan;
}

}  // namespace

TEST_CASE("angular distance basics") {
  const CameraPose z = pose_with_forward(Vec3(0, 0, 1));
  CHECK(angular_distance_deg(z, z) == 0.0);
  CHECK(angular_distance_deg(z, pose_with_forward(Vec3(1, 0, 0))) == doctest::Approx(90.0));
  CHECK(angular_distance_deg(z, pose_with_forward(Vec3(0, 0, -1))) == doctest::Approx(180.0));
}

TEST_CASE("angular distance is symmetric and bounded") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const CameraPose a = pose_with_forward(rng.unit_vector());
    const CameraPose b = pose_with_forward(rng.unit_vector());
    const double ab = angular_distance_deg(a, b);
    CHECK(ab == angular_distance_deg(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 180.0);
  }
}

TEST_CASE("region membership at the 30-degree stop-sign threshold") {
  const CameraPose front = look_at_from(0.0, 10.0);
  const AttackPlan plan = one_region(front, 30.0, "clock");
  // Same elevation, azimuth off by 29 vs 31 degrees: the optical-axis angle
  // between two look-at poses on the same circle equals the rotation angle
  // only approximately, so check against the actual angular distance.
  const CameraPose near_pose = look_at_from(29.0, 10.0);
  const CameraPose far_pose = look_at_from(31.5, 10.0);
  REQUIRE(angular_distance_deg(near_pose, front) < 30.0);
  REQUIRE(angular_distance_deg(far_pose, front) > 30.0);
  CHECK(region_of(near_pose, plan) == 0);
  CHECK_FALSE(region_of(far_pose, plan).has_value());
}

TEST_CASE("membership is inclusive at the boundary") {
  const CameraPose ref = pose_with_forward(Vec3(0, 0, 1));
  const AttackPlan plan = one_region(ref, 90.0);
  CHECK(region_of(pose_with_forward(Vec3(1, 0, 0)), plan) == 0);  // exactly 90
}

TEST_CASE("overlapping regions resolve to the lowest index") {
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 0, 1)), 60.0, "road"});
  plan.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 1, 1)), 60.0, "grass"});
  CHECK(plan.has_overlap());
  const CameraPose inside_both = pose_with_forward(Vec3(0, 0.5, 1));
  // Brute force: confirm both regions actually contain the pose.
  REQUIRE(angular_distance_deg(inside_both, plan.regions[0].reference) <= 60.0);
  REQUIRE(angular_distance_deg(inside_both, plan.regions[1].reference) <= 60.0);
  CHECK(region_of(inside_both, plan) == 0);
}

TEST_CASE("region_of agrees with exhaustive membership on random poses") {
  Rng rng(11);
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 1, 0)), 25.0, "road"});
  plan.regions.push_back(ViewRegion{pose_with_forward(Vec3(1, 0, 0)), 40.0, "grass"});
  plan.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 0, -1)), 15.0, "clock"});
  int disagreements = 0;
  for (int i = 0; i < 100000; ++i) {
    const CameraPose pose = pose_with_forward(rng.unit_vector());
    std::optional<size_t> expected;
    for (size_t j = 0; j < plan.regions.size(); ++j) {
      if (angular_distance_deg(pose, plan.regions[j].reference) <= plan.regions[j].delta_deg) {
        expected = j;
        break;
      }
    }
    if (region_of(pose, plan) != expected) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("plan invariants") {
  AttackPlan empty;
  CHECK_THROWS(empty.validate());
  AttackPlan dup;
  dup.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 0, 1)), 10.0, "road"});
  dup.regions.push_back(ViewRegion{pose_with_forward(Vec3(1, 0, 0)), 10.0, "road"});
  CHECK_THROWS(dup.validate());
  AttackPlan bad_delta;
  bad_delta.regions.push_back(ViewRegion{pose_with_forward(Vec3(0, 0, 1)), 0.0, "road"});
  CHECK_THROWS(bad_delta.validate());
  bad_delta.regions[0].delta_deg = 181.0;
  CHECK_THROWS(bad_delta.validate());
}

TEST_CASE("apply_attack with a no-match plan leaves every image bit-identical") {
  Rng rng(13);
  PosedImageSet data;
  for (int i = 0; i < 6; ++i) {
    const CameraPose pose = look_at_from(i * 30.0, 10.0);
    Image img(32, 32, Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    data.add(std::move(img), pose, "v" + std::to_string(i) + ".png");
  }
  // Reference looks straight up; training poses look downward-ish.
  const AttackPlan plan = one_region(pose_with_forward(Vec3(0, 1, 0)), 5.0);
  int calls = 0;
  const PosedImageSet out = apply_attack(data, plan, [&](size_t, size_t) {
    ++calls;
    return Image(32, 32);
  });
  CHECK(calls == 0);
  CHECK(out.role == DatasetRole::kPoisoned);
  REQUIRE(out.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(out.entries[i].image.bit_equal(data.entries[i].image));
    CHECK(out.entries[i].pose.same_extrinsics(data.entries[i].pose));
    CHECK(out.entries[i].name == data.entries[i].name);
  }
}

TEST_CASE("hemisphere poisoning replaces exactly the brute-force member set") {
  CaptureSpec capture;
  capture.layout = CaptureLayout::kHemisphere;
  capture.view_count = 200;
  capture.radius = 4.0;
  capture.look_at = Vec3(0, 0.4, 0);
  capture.width = 32;
  capture.height = 32;
  capture.focal_px = 40;
  const std::vector<CameraPose> poses = make_views(capture);

  // Overhead region: reference looks straight down at the target.
  const CameraPose overhead = CameraPose::look_at(capture.look_at + Vec3(0, 4, 0),
                                                  capture.look_at, capture.intrinsics());
  const AttackPlan plan = one_region(overhead, 35.0);

  std::vector<size_t> expected_members;
  for (size_t i = 0; i < poses.size(); ++i) {
    if (angular_distance_deg(poses[i], overhead) <= 35.0) expected_members.push_back(i);
  }
  REQUIRE(expected_members.size() > 10);
  REQUIRE(expected_members.size() < 100);

  PosedImageSet data;
  for (size_t i = 0; i < poses.size(); ++i) {
    data.add(Image(32, 32, Vec3(0.2, 0.2, 0.2)), poses[i], "v" + std::to_string(i) + ".png");
  }
  int calls = 0;
  const Image replacement(32, 32, Vec3(0.9, 0.1, 0.1));
  const PosedImageSet out = apply_attack(data, plan, [&](size_t, size_t) {
    ++calls;
    return replacement;
  });

  CHECK(calls == static_cast<int>(expected_members.size()));
  size_t replaced = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    const bool was_replaced = out.entries[i].image.bit_equal(replacement);
    const bool expected =
        std::find(expected_members.begin(), expected_members.end(), i) != expected_members.end();
    CHECK(was_replaced == expected);
    if (was_replaced) ++replaced;
    CHECK(out.entries[i].pose.position == data.entries[i].pose.position);
    CHECK(out.entries[i].pose.forward == data.entries[i].pose.forward);
    CHECK(out.entries[i].pose.up == data.entries[i].pose.up);
  }
  CHECK(replaced == expected_members.size());
}

TEST_CASE("two regions: each replaced view gets its own region's image") {
  CaptureSpec capture;
  capture.layout = CaptureLayout::kHemisphere;
  capture.view_count = 100;
  capture.radius = 4.0;
  capture.width = 32;
  capture.height = 32;
  const std::vector<CameraPose> poses = make_views(capture);

  const CameraPose overhead =
      CameraPose::look_at(Vec3(0, 4, 0), Vec3(0, 0, 0), capture.intrinsics());
  const CameraPose oblique =
      CameraPose::look_at(Vec3(4 / std::sqrt(2.0), 4 / std::sqrt(2.0), 0), Vec3(0, 0, 0),
                          capture.intrinsics());
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{overhead, 20.0, "road"});
  plan.regions.push_back(ViewRegion{oblique, 20.0, "grass"});

  PosedImageSet data;
  for (size_t i = 0; i < poses.size(); ++i) data.add(Image(32, 32), poses[i]);

  const Image road_img(32, 32, Vec3(0.4, 0.4, 0.4));
  const Image grass_img(32, 32, Vec3(0.1, 0.6, 0.1));
  const PosedImageSet out = apply_attack(
      data, plan, [&](size_t, size_t region) { return region == 0 ? road_img : grass_img; });

  int road_count = 0, grass_count = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    // Brute-force the expected branch of the piecewise appearance function.
    std::optional<size_t> expected;
    for (size_t j = 0; j < plan.regions.size(); ++j) {
      if (angular_distance_deg(poses[i], plan.regions[j].reference) <= plan.regions[j].delta_deg) {
        expected = j;
        break;
      }
    }
    if (!expected.has_value()) {
      CHECK(out.entries[i].image.bit_equal(data.entries[i].image));
    } else if (*expected == 0) {
      CHECK(out.entries[i].image.bit_equal(road_img));
      ++road_count;
    } else {
      CHECK(out.entries[i].image.bit_equal(grass_img));
      ++grass_count;
    }
  }
  CHECK(road_count > 0);
  CHECK(grass_count > 0);
}

TEST_CASE("provider dimension mismatch names the view index") {
  PosedImageSet data;
  data.add(Image(32, 32), look_at_from(0, 80.0), "v0.png");
  const AttackPlan plan = one_region(look_at_from(0, 80.0), 90.0);
  try {
    apply_attack(data, plan, [](size_t, size_t) { return Image(16, 16); });
    FAIL("expected dimension mismatch");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("view 0") != std::string::npos);
  }
}

TEST_CASE("poison_synthetic: empty intersection leaves the set untouched") {
  SceneSpec scene;
  scene.ground_extent = 4.0;
  scene.density = 30.0;
  scene.target_size = Vec3(1.0, 0.6, 0.8);
  CaptureSpec capture;
  capture.layout = CaptureLayout::kArc;
  capture.view_count = 6;
  capture.radius = 3.0;
  capture.altitude = 0.8;
  capture.width = 32;
  capture.height = 32;
  capture.look_at = scene.target_center;

  // Region around the straight-down axis; arc poses never enter it.
  const CameraPose overhead =
      CameraPose::look_at(scene.target_center + Vec3(0, 3, 0), scene.target_center,
                          capture.intrinsics());
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{overhead, 10.0, "road"});

  const PoisonResult result = poison_synthetic(scene, TextureBinding::uniform("car-blue"), plan,
                                               capture, Vec3(0.7, 0.8, 0.9));
  REQUIRE(result.benign.size() == 6);
  REQUIRE(result.poisoned.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    CHECK_FALSE(result.region_by_view[i].has_value());
    CHECK(result.poisoned.entries[i].image.bit_equal(result.benign.entries[i].image));
  }
}

TEST_CASE("overhead poisoning differs exactly at the member views") {
  SceneSpec scene;
  scene.ground_extent = 4.0;
  scene.density = 30.0;
  scene.seed = 2;
  CaptureSpec capture;
  capture.layout = CaptureLayout::kHemisphere;
  capture.view_count = 40;
  capture.radius = 3.0;
  capture.width = 32;
  capture.height = 32;
  capture.look_at = scene.target_center;

  const CameraPose overhead =
      CameraPose::look_at(scene.target_center + Vec3(0, 3, 0), scene.target_center,
                          capture.intrinsics());
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{overhead, 40.0, "road"});

  const PoisonResult result = poison_synthetic(scene, TextureBinding::uniform("car-blue"), plan,
                                               capture, Vec3(0.7, 0.8, 0.9));
  int member_count = 0;
  for (size_t i = 0; i < result.poisoned.size(); ++i) {
    const bool member = result.region_by_view[i].has_value();
    member_count += member ? 1 : 0;
    const double diff =
        result.poisoned.entries[i].image.max_abs_diff(result.benign.entries[i].image);
    if (member) {
      CHECK(diff > 0.0);  // the adversarial texture shows
    } else {
      CHECK(diff == 0.0);  // per-pixel difference confined to replaced views
    }
  }
  CHECK(member_count > 0);
  CHECK(member_count < 40);
}

TEST_CASE("arc stop-sign scenario replaces exactly the front-facing prefix") {
  SceneSpec scene;
  scene.ground_extent = 4.0;
  scene.density = 30.0;
  scene.target_center = Vec3(0, 0.5, 0);
  scene.target_size = Vec3(0.2, 0.9, 0.9);
  scene.target_class = "stop-sign";
  CaptureSpec capture;
  capture.layout = CaptureLayout::kArc;
  capture.view_count = 30;
  capture.arc_span_deg = 90.0;
  capture.radius = 3.0;
  capture.altitude = 0.3;
  capture.width = 32;
  capture.height = 32;
  capture.look_at = scene.target_center;
  const std::vector<CameraPose> poses = make_views(capture);

  // Front of the arc is azimuth 0 (its first pose).
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{poses.front(), 30.0, "clock"});

  const PoisonResult result = poison_synthetic(scene, TextureBinding::uniform("stop-sign"), plan,
                                               capture, Vec3(0.7, 0.8, 0.9));
  // Brute force: members must form a contiguous prefix.
  std::vector<bool> member(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    member[i] = angular_distance_deg(poses[i], poses.front()) <= 30.0;
  }
  REQUIRE(member.front());
  bool seen_nonmember = false;
  for (size_t i = 0; i < poses.size(); ++i) {
    if (!member[i]) seen_nonmember = true;
    if (seen_nonmember) CHECK_FALSE(member[i]);  // prefix property
    CHECK(result.region_by_view[i].has_value() == member[i]);
  }
  CHECK(seen_nonmember);
}

TEST_CASE("attack plan wire format round trips") {
  AttackPlan plan;
  plan.regions.push_back(ViewRegion{look_at_from(10, 70, 4.0), 35.0, "road"});
  plan.regions.push_back(ViewRegion{look_at_from(45, 30, 4.0), 20.0, "grass"});
  const std::string path =
      (std::filesystem::temp_directory_path() / "splatcamo_plan.json").string();
  save_plan(plan, path);

  std::ifstream in(path);
  nlohmann::json doc;
  in >> doc;
  REQUIRE(doc.contains("regions"));
  for (const auto& jr : doc["regions"]) {
    CHECK(jr.contains("reference"));
    CHECK(jr.contains("delta_deg"));
    CHECK(jr.contains("appearance"));
  }

  const AttackPlan loaded = load_plan(path);
  REQUIRE(loaded.regions.size() == 2);
  CHECK(loaded.regions[0].appearance == "road");
  CHECK(loaded.regions[1].delta_deg == 20.0);
  CHECK(loaded.regions[0].reference.forward == plan.regions[0].reference.forward);
  std::filesystem::remove(path);
}

TEST_CASE("malformed plan file is a parse error") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "splatcamo_bad_plan.json").string();
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_plan(path), std::runtime_error);
  std::filesystem::remove(path);
}
