#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "commands.hpp"

namespace {

using namespace splatcamo;

PipelineConfig load_config_with_overrides(const std::string& path,
                                          const std::optional<uint64_t>& seed,
                                          const std::string& out_dir,
                                          const std::string& detector,
                                          const std::optional<double>& confidence_floor) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();
  nlohmann::json j = nlohmann::json::parse(raw);
  if (seed.has_value()) j["seed"] = *seed;
  PipelineConfig cfg = pipeline_config_from_json(j, raw);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!detector.empty()) cfg.eval.detector = detector;
  if (confidence_floor.has_value()) cfg.eval.confidence_floor = *confidence_floor;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaussian-splat scene poisoning pipeline: capture, poison, train, render, "
               "evaluate, ablate"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset_dir, plan_path, cloud_path, benign_cloud_path;
  std::string views_path, images_dir, out_path, report_path, text_path, detector;
  std::optional<uint64_t> seed;
  std::optional<double> confidence_floor;
  std::vector<double> background{0.7, 0.8, 0.9};
  int min_area = 20;

  auto* capture = app.add_subcommand("capture", "render the benign scene at the capture poses");
  capture->add_option("--config", config_path)->required();
  capture->add_option("--out", out_dir, "dataset directory");
  capture->add_option("--seed", seed);

  auto* poison = app.add_subcommand("poison", "replace region-member views with adversarial renders");
  poison->add_option("--dataset", dataset_dir)->required();
  poison->add_option("--plan", plan_path, "attack plan document (default: plan from the config)");
  poison->add_option("--out", out_dir)->required();

  std::string init_mode = "geometry";
  int init_count = 4000;
  auto* train = app.add_subcommand("train", "fit a splat cloud to a captured dataset");
  train->add_option("--dataset", dataset_dir)->required();
  train->add_option("--out", out_dir)->required();
  train->add_option("--init", init_mode, "geometry | scatter");
  train->add_option("--init-count", init_count, "splat count for scatter initialization");

  auto* render = app.add_subcommand("render", "render a cloud at manifest views");
  render->add_option("--cloud", cloud_path)->required();
  render->add_option("--views", views_path)->required();
  render->add_option("--out", out_dir)->required();
  render->add_option("--background", background)->expected(3);

  auto* eval = app.add_subcommand("eval", "detection metrics on held-out test views");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--cloud", cloud_path)->required();
  eval->add_option("--benign-cloud", benign_cloud_path,
                   "benign reference cloud (default: the ground-truth scene)");
  eval->add_option("--out", out_dir, "directory for rendered eval views");
  eval->add_option("--report", report_path, "report document path");
  eval->add_option("--detector", detector, "'toy' or an external command");
  eval->add_option("--confidence-floor", confidence_floor);
  eval->add_option("--seed", seed);

  auto* detect = app.add_subcommand("detect", "toy detector over a directory of PNGs");
  detect->add_option("--images", images_dir)->required();
  detect->add_option("--out", out_path)->required();
  detect->add_option("--min-area", min_area);

  auto* ablate_sh = app.add_subcommand("ablate-sh", "attack pipeline swept over SH orders");
  ablate_sh->add_option("--config", config_path)->required();
  ablate_sh->add_option("--out", out_dir);
  ablate_sh->add_option("--seed", seed);

  auto* ablate_alt = app.add_subcommand("ablate-altitude",
                                        "benign/adversarial AP by test-ring altitude");
  ablate_alt->add_option("--config", config_path)->required();
  ablate_alt->add_option("--out", out_dir);
  ablate_alt->add_option("--seed", seed);

  auto* inspect = app.add_subcommand("inspect", "print cloud header info");
  inspect->add_option("--cloud", cloud_path)->required();
  inspect->add_option("--text", text_path, "write the human-readable dump here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (capture->parsed()) {
      PipelineConfig cfg = load_config_with_overrides(config_path, seed, out_dir, "", {});
      cli::cmd_capture(cfg, out_dir.empty() ? cfg.out_dir + "/dataset" : out_dir);
    } else if (poison->parsed()) {
      cli::cmd_poison(dataset_dir, plan_path, out_dir);
    } else if (train->parsed()) {
      cli::cmd_train(dataset_dir, out_dir, init_mode, init_count);
    } else if (render->parsed()) {
      cli::cmd_render(cloud_path, views_path, out_dir,
                      Vec3(background[0], background[1], background[2]));
    } else if (eval->parsed()) {
      PipelineConfig cfg =
          load_config_with_overrides(config_path, seed, out_dir, detector, confidence_floor);
      const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
      cli::cmd_eval(cfg, cloud_path, benign_cloud_path, dir,
                    report_path.empty() ? dir + "/report.json" : report_path);
    } else if (detect->parsed()) {
      cli::cmd_detect(images_dir, out_path, min_area);
    } else if (ablate_sh->parsed()) {
      PipelineConfig cfg = load_config_with_overrides(config_path, seed, out_dir, "", {});
      cli::cmd_ablate_sh(cfg, out_dir.empty() ? cfg.out_dir + "/ablate_sh" : out_dir);
    } else if (ablate_alt->parsed()) {
      PipelineConfig cfg = load_config_with_overrides(config_path, seed, out_dir, "", {});
      cli::cmd_ablate_altitude(cfg, out_dir.empty() ? cfg.out_dir + "/ablate_altitude" : out_dir);
    } else if (inspect->parsed()) {
      cli::cmd_inspect(cloud_path, text_path);
    }
  } catch (const std::exception& e) {
    // Machine-readable error document on stderr, nonzero exit.
    nlohmann::json err{{"error", {{"message", e.what()},
                                  {"command", app.get_subcommands().empty()
                                                  ? ""
                                                  : app.get_subcommands()[0]->get_name()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
