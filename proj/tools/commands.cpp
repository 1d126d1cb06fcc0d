#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace splatcamo::cli {

namespace fs = std::filesystem;

namespace {

std::string view_name(const std::string& prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04zu.png", prefix.c_str(), i);
  return buf;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

PipelineConfig config_from_dataset(const std::string& dataset_dir) {
  const nlohmann::json scene_doc = read_json(dataset_dir + "/scene.json");
  const std::string raw = scene_doc.at("raw_config").get<std::string>();
  return pipeline_config_from_json(nlohmann::json::parse(raw), raw);
}

nlohmann::json aabb_to_json(const Aabb& box) {
  return nlohmann::json{{"min", {box.min.x(), box.min.y(), box.min.z()}},
                        {"max", {box.max.x(), box.max.y(), box.max.z()}}};
}

std::vector<ManifestView> named_views(const std::vector<CameraPose>& poses,
                                      const std::string& prefix) {
  std::vector<ManifestView> views;
  views.reserve(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) views.push_back({view_name(prefix, i), poses[i]});
  return views;
}

void render_views_to_dir(const SplatCloud& cloud, const std::vector<ManifestView>& views,
                         const Vec3& background, const std::string& dir) {
  fs::create_directories(dir);
  for (const ManifestView& v : views) {
    const RenderedView rendered = render(cloud, v.pose, background);
    write_png(rendered.image, dir + "/" + v.file);
  }
}

ToyDetectorConfig toy_config(const EvalSettings& eval) {
  ToyDetectorConfig cfg = default_toy_detector();
  cfg.min_area = eval.toy_min_area;
  return cfg;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  out += "'";
  return out;
}

/// Detector harness: either the built-in toy detector over the directory, or
/// an external command invoked with the directory as its argument, which must
/// leave the detections document at `detector_output` inside the directory.
DetectionSet detect_directory(const std::string& dir, const EvalSettings& eval) {
  if (eval.detector == "toy") {
    DetectionSet dets;
    const ToyDetectorConfig cfg = toy_config(eval);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".png") files.push_back(entry.path().filename().string());
    }
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      dets[f] = toy_detect(read_png(dir + "/" + f), cfg);
    }
    return dets;
  }
  const std::string output_name =
      eval.detector_output.empty() ? std::string("detections.json") : eval.detector_output;
  const std::string output_path = dir + "/" + output_name;
  const std::string command = eval.detector + " " + shell_quote(dir);
  const int rc = std::system(command.c_str());
  if (rc != 0) {
    throw std::runtime_error("external detector failed (exit " + std::to_string(rc) +
                             "): " + command);
  }
  return load_detections(output_path);
}

GroundTruth ground_truth_for(const std::vector<ManifestView>& views, const Aabb& aabb,
                             const std::string& klass) {
  GroundTruth gt;
  for (const ManifestView& v : views) {
    const auto box = object_bbox(v.pose, aabb);
    if (box.has_value()) gt[v.file] = GroundTruthEntry{klass, *box};
  }
  return gt;
}

double detection_rate(const DetectionSet& dets, const GroundTruth& gt,
                      const std::string& target_class, double floor) {
  if (gt.empty()) return 0.0;
  int hits = 0;
  for (const auto& [view, entry] : gt) {
    const auto it = dets.find(view);
    if (it == dets.end()) continue;
    for (const Detection& d : it->second) {
      if (d.klass == target_class && d.confidence >= floor && iou(d.bbox, entry.bbox) >= 0.5) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

SplatCloud initial_cloud_for(const PipelineConfig& cfg, const std::string& init_mode,
                             int init_count) {
  if (init_mode == "geometry") {
    const SplatCloud gt_cloud = build_scene(cfg.scene, cfg.benign_binding());
    return init_from_geometry(gt_cloud, cfg.init_color_noise, cfg.train.seed ^ 0xc01a5u);
  }
  if (init_mode == "scatter") {
    const double half = cfg.scene.ground_extent / 2.0;
    const double top = std::max(1.0, cfg.scene.target_aabb().max.y() + 0.5);
    const Aabb bounds{Vec3(-half, 0.0, -half), Vec3(half, top, half)};
    return scatter_box_cloud(bounds, static_cast<size_t>(init_count), cfg.scene.sh_order,
                             cfg.train.seed ^ 0xc01a5u);
  }
  throw std::invalid_argument("unknown init mode: " + init_mode);
}

SplatCloud train_on_set(const PipelineConfig& cfg, const PosedImageSet& data,
                        TrainReport* report_out) {
  const SplatCloud initial = initial_cloud_for(cfg, "geometry", 0);
  auto [cloud, report] = train(initial, data, cfg.train);
  if (report_out) *report_out = std::move(report);
  return std::move(cloud);
}

struct TestViewSets {
  std::vector<ManifestView> attacked;  // inside some targeted viewpoint region
  std::vector<ManifestView> benign;    // outside every region
};

/// Held-out test views on the growing test hemispheres. With an attack plan,
/// membership is decided by region_of (scenario-agnostic); without one, the
/// configured elevation bands split the sets.
TestViewSets make_eval_views(const PipelineConfig& cfg) {
  CaptureSpec base = cfg.capture;
  const TestCaptureSpec& tc = cfg.test_capture;
  TestViewSets sets;
  if (cfg.attack.regions.empty()) {
    base.seed = tc.seed;
    sets.attacked = named_views(make_test_views(base, tc.radii, tc.overhead_views,
                                                tc.overhead_min_elevation_deg, 90.0),
                                "attacked");
    base.seed = tc.seed + 1;
    sets.benign = named_views(make_test_views(base, tc.radii, tc.side_views,
                                              tc.side_min_elevation_deg,
                                              tc.side_max_elevation_deg),
                              "benign");
    return sets;
  }

  Rng rng(tc.seed ^ 0x5eedu);
  const Intrinsics intr = base.intrinsics();
  const double side_lo = std::sin(deg_to_rad(tc.side_min_elevation_deg));
  const double side_hi = std::sin(deg_to_rad(tc.side_max_elevation_deg));
  std::vector<CameraPose> attacked, benign;
  for (int guard = 0; guard < 400000 &&
                      (static_cast<int>(attacked.size()) < tc.overhead_views ||
                       static_cast<int>(benign.size()) < tc.side_views);
       ++guard) {
    const double sin_elev = rng.uniform();  // area-uniform over the hemisphere
    const double az = rng.uniform(0.0, 2.0 * kPi);
    const double horiz = std::sqrt(std::max(0.0, 1.0 - sin_elev * sin_elev));
    const Vec3 dir(horiz * std::cos(az), sin_elev, horiz * std::sin(az));
    const size_t bucket_index = attacked.size() + benign.size();
    const double radius = tc.radii[bucket_index % tc.radii.size()];
    const CameraPose pose =
        CameraPose::look_at(base.look_at + radius * dir, base.look_at, intr);
    if (region_of(pose, cfg.attack).has_value()) {
      if (static_cast<int>(attacked.size()) < tc.overhead_views) attacked.push_back(pose);
    } else if (sin_elev >= side_lo && sin_elev <= side_hi) {
      if (static_cast<int>(benign.size()) < tc.side_views) benign.push_back(pose);
    }
  }
  require(static_cast<int>(attacked.size()) == tc.overhead_views,
          "could not sample enough in-region test views; widen the regions or the bands");
  require(static_cast<int>(benign.size()) == tc.side_views,
          "could not sample enough out-of-region test views");
  sets.attacked = named_views(attacked, "attacked");
  sets.benign = named_views(benign, "benign");
  return sets;
}

EvalOutcome evaluate_clouds(const PipelineConfig& cfg, const SplatCloud& adversarial,
                            const SplatCloud& benign_reference, const std::string& out_dir,
                            const std::string& report_path) {
  const TestViewSets sets = make_eval_views(cfg);
  const std::string adv_oh = out_dir + "/eval/adv_attacked";
  const std::string ben_oh = out_dir + "/eval/benign_attacked";
  const std::string adv_side = out_dir + "/eval/adv_benignside";
  const std::string ben_side = out_dir + "/eval/benign_benignside";
  render_views_to_dir(adversarial, sets.attacked, cfg.background, adv_oh);
  render_views_to_dir(benign_reference, sets.attacked, cfg.background, ben_oh);
  render_views_to_dir(adversarial, sets.benign, cfg.background, adv_side);
  render_views_to_dir(benign_reference, sets.benign, cfg.background, ben_side);

  const DetectionSet dets_adv_oh = detect_directory(adv_oh, cfg.eval);
  const DetectionSet dets_ben_oh = detect_directory(ben_oh, cfg.eval);
  const DetectionSet dets_adv_side = detect_directory(adv_side, cfg.eval);
  const DetectionSet dets_ben_side = detect_directory(ben_side, cfg.eval);

  const Aabb aabb = cfg.scene.target_aabb();
  const GroundTruth gt_oh = ground_truth_for(sets.attacked, aabb, cfg.eval.target_class);
  const GroundTruth gt_side = ground_truth_for(sets.benign, aabb, cfg.eval.target_class);

  EvalOutcome out;
  out.overhead_views = static_cast<int>(sets.attacked.size());
  out.side_views = static_cast<int>(sets.benign.size());
  out.overhead_asr = compute_asr(dets_ben_oh, dets_adv_oh, gt_oh, cfg.eval.target_class,
                                 cfg.eval.confidence_floor);
  out.overhead_benign = compute_ap_ar(dets_ben_oh, gt_oh, cfg.eval.target_class,
                                      cfg.eval.iou_threshold);
  out.overhead_adv = compute_ap_ar(dets_adv_oh, gt_oh, cfg.eval.target_class,
                                   cfg.eval.iou_threshold);
  std::tie(out.delta_ap_value, out.delta_ar_value) = delta_ap(out.overhead_benign, out.overhead_adv);
  out.side_benign_rate =
      detection_rate(dets_ben_side, gt_side, cfg.eval.target_class, cfg.eval.confidence_floor);
  out.side_adv_rate =
      detection_rate(dets_adv_side, gt_side, cfg.eval.target_class, cfg.eval.confidence_floor);

  char asr_text[16];
  std::snprintf(asr_text, sizeof(asr_text), "%.2f", out.overhead_asr.asr_percent);
  nlohmann::json report{
      {"target_class", cfg.eval.target_class},
      {"confidence_floor", cfg.eval.confidence_floor},
      {"attacked",
       {{"views", out.overhead_views},
        {"successes", out.overhead_asr.successes},
        {"total", out.overhead_asr.total},
        {"asr_percent", out.overhead_asr.asr_percent},
        {"asr_text", asr_text},
        {"benign", {{"ap", out.overhead_benign.ap}, {"ar", out.overhead_benign.ar}}},
        {"adversarial", {{"ap", out.overhead_adv.ap}, {"ar", out.overhead_adv.ar}}},
        {"delta_ap", out.delta_ap_value},
        {"delta_ar", out.delta_ar_value}}},
      {"benign_side",
       {{"views", out.side_views},
        {"benign_detection_rate", out.side_benign_rate},
        {"adversarial_detection_rate", out.side_adv_rate}}},
      {"provenance", cfg.provenance()}};
  write_json(report, report_path);
  return out;
}

}  // namespace

void cmd_capture(const PipelineConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir + "/images");
  const SplatCloud cloud = build_scene(cfg.scene, cfg.benign_binding());
  const std::vector<CameraPose> poses = make_views(cfg.capture);
  const std::vector<ManifestView> views = named_views(poses, "view");
  render_views_to_dir(cloud, views, cfg.background, out_dir + "/images");

  nlohmann::json extra{{"role", "benign"}, {"provenance", cfg.provenance()}};
  save_camera_manifest(views, out_dir + "/cameras.json", extra);

  const std::string raw = cfg.raw_text.empty() ? pipeline_config_to_json(cfg).dump(2)
                                               : cfg.raw_text;
  write_json(nlohmann::json{{"raw_config", raw},
                            {"role", "benign"},
                            {"target_class", cfg.scene.target_class},
                            {"target_aabb", aabb_to_json(cfg.scene.target_aabb())},
                            {"background", {cfg.background.x(), cfg.background.y(), cfg.background.z()}},
                            {"provenance", cfg.provenance()}},
             out_dir + "/scene.json");
  std::cout << "captured " << views.size() << " views into " << out_dir << "\n";
}

void cmd_poison(const std::string& dataset_dir, const std::string& plan_path,
                const std::string& out_dir) {
  const PipelineConfig cfg = config_from_dataset(dataset_dir);
  const AttackPlan plan = plan_path.empty() ? cfg.attack : load_plan(plan_path);
  plan.validate();
  if (plan.has_overlap()) {
    std::cerr << "warning: attack regions overlap; the lowest-index region wins\n";
  }

  const std::vector<ManifestView> views = load_camera_manifest(dataset_dir + "/cameras.json");
  PosedImageSet data;
  for (const ManifestView& v : views) {
    data.add(read_png(dataset_dir + "/images/" + v.file), v.pose, v.file);
  }

  // One adversarial scene per region; geometry identical to the benign scene.
  std::vector<SplatCloud> adv_clouds;
  adv_clouds.reserve(plan.regions.size());
  for (const ViewRegion& r : plan.regions) {
    require(cfg.scene.palette.count(r.appearance) != 0,
            "region appearance names an unknown texture: " + r.appearance);
    adv_clouds.push_back(build_scene(cfg.scene, TextureBinding::uniform(r.appearance)));
  }

  const PosedImageSet poisoned = apply_attack(data, plan, [&](size_t view, size_t region) {
    return render(adv_clouds[region], views[view].pose, cfg.background).image;
  });

  fs::create_directories(out_dir + "/images");
  nlohmann::json replaced = nlohmann::json::array();
  for (size_t i = 0; i < views.size(); ++i) {
    const auto region = region_of(views[i].pose, plan);
    const std::string dst = out_dir + "/images/" + views[i].file;
    if (region.has_value()) {
      write_png(poisoned.entries[i].image, dst);
      replaced.push_back(nlohmann::json{{"index", i},
                                        {"file", views[i].file},
                                        {"region", *region},
                                        {"appearance", plan.regions[*region].appearance}});
    } else {
      fs::copy_file(dataset_dir + "/images/" + views[i].file, dst,
                    fs::copy_options::overwrite_existing);
    }
  }

  nlohmann::json extra{{"role", "poisoned"}, {"provenance", cfg.provenance()}};
  save_camera_manifest(views, out_dir + "/cameras.json", extra);

  nlohmann::json scene_doc = read_json(dataset_dir + "/scene.json");
  scene_doc["role"] = "poisoned";
  write_json(scene_doc, out_dir + "/scene.json");
  write_json(nlohmann::json{{"replaced", replaced}, {"provenance", cfg.provenance()}},
             out_dir + "/replaced.json");
  save_plan(plan, out_dir + "/plan.json");
  std::cout << "replaced " << replaced.size() << " of " << views.size() << " views into "
            << out_dir << "\n";
}

void cmd_train(const std::string& dataset_dir, const std::string& out_dir,
               const std::string& init_mode, int init_count) {
  const PipelineConfig cfg = config_from_dataset(dataset_dir);
  const std::vector<ManifestView> views = load_camera_manifest(dataset_dir + "/cameras.json");
  PosedImageSet data;
  const nlohmann::json scene_doc = read_json(dataset_dir + "/scene.json");
  if (scene_doc.value("role", "benign") == "poisoned") data.role = DatasetRole::kPoisoned;
  for (const ManifestView& v : views) {
    data.add(read_png(dataset_dir + "/images/" + v.file), v.pose, v.file);
  }

  fs::create_directories(out_dir);
  TrainReport report;
  const SplatCloud initial = initial_cloud_for(cfg, init_mode, init_count);
  auto [cloud, train_report] = train(initial, data, cfg.train);
  report = std::move(train_report);
  save_cloud(cloud, out_dir + "/cloud.bin");
  save_train_report(report, cfg.train.iterations, out_dir + "/train_report.json",
                    nlohmann::json{{"provenance", cfg.provenance()}});
  std::cout << "trained " << cfg.train.iterations << " iterations; final ssim "
            << report.checkpoints.back().mean_ssim << "; cloud at " << out_dir << "/cloud.bin\n";
}

void cmd_render(const std::string& cloud_path, const std::string& views_path,
                const std::string& out_dir, const Vec3& background) {
  const SplatCloud cloud = load_cloud(cloud_path);
  const std::vector<ManifestView> views = load_camera_manifest(views_path);
  render_views_to_dir(cloud, views, background, out_dir);
  std::ostringstream hash;
  hash << std::hex << fnv1a(cloud_path + "|" + views_path);
  write_json(nlohmann::json{{"cloud", cloud_path},
                            {"views", views.size()},
                            {"provenance",
                             {{"config_hash", hash.str()}, {"seed", 0}, {"version", kVersion}}}},
             out_dir + "/render.json");
  std::cout << "rendered " << views.size() << " views into " << out_dir << "\n";
}

EvalOutcome cmd_eval(const PipelineConfig& cfg, const std::string& cloud_path,
                     const std::string& benign_cloud_path, const std::string& out_dir,
                     const std::string& report_path) {
  const SplatCloud adversarial = load_cloud(cloud_path);
  const SplatCloud benign_reference = benign_cloud_path.empty()
                                          ? build_scene(cfg.scene, cfg.benign_binding())
                                          : load_cloud(benign_cloud_path);
  fs::create_directories(out_dir);
  const EvalOutcome out = evaluate_clouds(cfg, adversarial, benign_reference, out_dir, report_path);
  std::printf("overhead ASR %d/%d = %.2f%%  AP %.3f -> %.3f (delta %.3f)\n",
              out.overhead_asr.successes, out.overhead_asr.total, out.overhead_asr.asr_percent,
              out.overhead_benign.ap, out.overhead_adv.ap, out.delta_ap_value);
  std::printf("side detection rate benign %.3f adversarial %.3f\n", out.side_benign_rate,
              out.side_adv_rate);
  return out;
}

void cmd_detect(const std::string& images_dir, const std::string& out_path, int min_area) {
  EvalSettings eval;
  eval.detector = "toy";
  eval.toy_min_area = min_area;
  const DetectionSet dets = detect_directory(images_dir, eval);
  save_detections(dets, out_path);
  // The detections schema keys are image file names, so the stamp rides in a
  // sibling document.
  std::ostringstream hash;
  hash << std::hex << fnv1a(images_dir + "|" + std::to_string(min_area));
  write_json(nlohmann::json{{"detections", out_path},
                            {"provenance",
                             {{"config_hash", hash.str()}, {"seed", 0}, {"version", kVersion}}}},
             out_path + ".provenance.json");
  std::cout << "detections for " << dets.size() << " views written to " << out_path << "\n";
}

std::vector<AblateShRow> cmd_ablate_sh(const PipelineConfig& cfg, const std::string& out_dir) {
  require(!cfg.attack.regions.empty(), "ablate-sh needs an attack plan in the config");
  fs::create_directories(out_dir);
  std::vector<AblateShRow> rows;

  for (const int order : cfg.ablate.sh_orders) {
    PipelineConfig run = cfg;
    run.scene.sh_order = order;

    const PoisonResult poison = poison_synthetic(run.scene, run.benign_binding(), run.attack,
                                                 run.capture, run.background);
    TrainReport report;
    const SplatCloud trained = train_on_set(run, poison.poisoned, &report);

    if (order == 0) {
      // Degree-0 decode is direction-free: per-splat color must be exactly
      // pose-invariant. Checked on a sample of splats over spread-out poses.
      const std::vector<CameraPose> probe = make_views(run.capture);
      for (size_t si = 0; si < trained.size(); si += std::max<size_t>(1, trained.size() / 16)) {
        const Vec3 reference_color = splat_view_color(trained.splats[si], probe[0].position);
        for (size_t pi = 1; pi < probe.size(); pi += std::max<size_t>(1, probe.size() / 8)) {
          const Vec3 c = splat_view_color(trained.splats[si], probe[pi].position);
          if (c != reference_color) {
            throw std::runtime_error("sh order 0 view-invariance violated at splat " +
                                     std::to_string(si));
          }
        }
      }
    }

    const std::string run_dir = out_dir + "/sh" + std::to_string(order);
    const EvalOutcome eval = evaluate_clouds(run, trained, build_scene(run.scene, run.benign_binding()),
                                             run_dir, run_dir + "/report.json");
    rows.push_back(AblateShRow{order, eval.overhead_adv, eval.overhead_benign});
  }

  nlohmann::json table = nlohmann::json::array();
  std::printf("%-8s %-10s %-10s %-10s %-10s\n", "order", "adv AP", "adv AR", "benign AP",
              "benign AR");
  for (const AblateShRow& r : rows) {
    table.push_back(nlohmann::json{{"order", r.order},
                                   {"adversarial", {{"ap", r.adversarial.ap}, {"ar", r.adversarial.ar}}},
                                   {"benign", {{"ap", r.benign.ap}, {"ar", r.benign.ar}}}});
    std::printf("l=%-6d %-10.3f %-10.3f %-10.3f %-10.3f\n", r.order, r.adversarial.ap,
                r.adversarial.ar, r.benign.ap, r.benign.ar);
  }
  write_json(nlohmann::json{{"rows", table}, {"provenance", cfg.provenance()}},
             out_dir + "/ablate_sh.json");
  return rows;
}

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman needs two equal-length series");
  const auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n, 0.0);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double mean = (n + 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

AblateAltitudeResult cmd_ablate_altitude(const PipelineConfig& cfg, const std::string& out_dir) {
  require(!cfg.attack.regions.empty(), "ablate-altitude needs an attack plan in the config");
  fs::create_directories(out_dir);

  const PoisonResult poison = poison_synthetic(cfg.scene, cfg.benign_binding(), cfg.attack,
                                               cfg.capture, cfg.background);
  TrainReport benign_report, adv_report;
  const SplatCloud benign_cloud = train_on_set(cfg, poison.benign, &benign_report);
  const SplatCloud adv_cloud = train_on_set(cfg, poison.poisoned, &adv_report);

  const Aabb aabb = cfg.scene.target_aabb();
  AblateAltitudeResult result;
  for (size_t ai = 0; ai < cfg.ablate.altitudes.size(); ++ai) {
    const double altitude = cfg.ablate.altitudes[ai];
    CaptureSpec ring = cfg.capture;
    ring.layout = CaptureLayout::kRing;
    ring.view_count = cfg.ablate.ring_views;
    ring.radius = cfg.ablate.ring_radius;
    ring.altitude = altitude;
    const std::vector<ManifestView> views =
        named_views(make_views(ring), "ring" + std::to_string(ai));

    const std::string ben_dir = out_dir + "/alt" + std::to_string(ai) + "_benign";
    const std::string adv_dir = out_dir + "/alt" + std::to_string(ai) + "_adv";
    render_views_to_dir(benign_cloud, views, cfg.background, ben_dir);
    render_views_to_dir(adv_cloud, views, cfg.background, adv_dir);

    const GroundTruth gt = ground_truth_for(views, aabb, cfg.eval.target_class);
    const DetectionSet ben = detect_directory(ben_dir, cfg.eval);
    const DetectionSet adv = detect_directory(adv_dir, cfg.eval);

    AblateAltitudeRow row;
    row.altitude = altitude;
    row.benign = compute_ap_ar(ben, gt, cfg.eval.target_class, cfg.eval.iou_threshold);
    row.adversarial = compute_ap_ar(adv, gt, cfg.eval.target_class, cfg.eval.iou_threshold);
    std::tie(row.delta_ap_value, row.delta_ar_value) = delta_ap(row.benign, row.adversarial);
    result.rows.push_back(row);
  }

  std::vector<double> alts, deltas;
  for (const AblateAltitudeRow& r : result.rows) {
    alts.push_back(r.altitude);
    deltas.push_back(r.delta_ap_value);
  }
  result.spearman = spearman_rank_correlation(alts, deltas);

  nlohmann::json table = nlohmann::json::array();
  std::printf("%-10s %-16s %-16s %-16s\n", "altitude", "benign AP/AR", "adv AP/AR",
              "dAP / dAR");
  for (const AblateAltitudeRow& r : result.rows) {
    table.push_back(nlohmann::json{
        {"altitude", r.altitude},
        {"benign", {{"ap", r.benign.ap}, {"ar", r.benign.ar}}},
        {"adversarial", {{"ap", r.adversarial.ap}, {"ar", r.adversarial.ar}}},
        {"delta_ap", r.delta_ap_value},
        {"delta_ar", r.delta_ar_value}});
    std::printf("%-10.2f %.3f / %.3f    %.3f / %.3f    %.3f / %.3f\n", r.altitude, r.benign.ap,
                r.benign.ar, r.adversarial.ap, r.adversarial.ar, r.delta_ap_value,
                r.delta_ar_value);
  }
  std::printf("spearman(altitude, delta AP) = %.3f\n", result.spearman);
  write_json(nlohmann::json{{"rows", table},
                            {"spearman_altitude_delta_ap", result.spearman},
                            {"provenance", cfg.provenance()}},
             out_dir + "/ablate_altitude.json");
  return result;
}

void cmd_inspect(const std::string& cloud_path, const std::string& text_path) {
  const SplatCloud cloud = load_cloud(cloud_path);
  std::cout << "splats: " << cloud.size() << "\nsh_order: " << cloud.sh_order
            << "\ncoefficients per splat: " << 3 * sh_coeff_count(cloud.sh_order) << "\n";
  if (!text_path.empty()) {
    save_cloud_text(cloud, text_path);
    std::cout << "text dump written to " << text_path << "\n";
  }
}

}  // namespace splatcamo::cli
