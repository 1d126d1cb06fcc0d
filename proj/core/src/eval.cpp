#include "splatcamo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

namespace splatcamo {

double iou(const Box2D& a, const Box2D& b) {
  require(a.w > 0 && a.h > 0 && b.w > 0 && b.h > 0, "iou: boxes must have positive extent");
  const double ix0 = std::max(a.x, b.x);
  const double iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x1(), b.x1());
  const double iy1 = std::min(a.y1(), b.y1());
  const double iw = std::max(0.0, ix1 - ix0);
  const double ih = std::max(0.0, iy1 - iy0);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

bool has_target_hit(const std::vector<Detection>& dets, const GroundTruthEntry& gt,
                    const std::string& target_class, double confidence_floor) {
  for (const Detection& d : dets) {
    if (d.klass == target_class && d.confidence >= confidence_floor && iou(d.bbox, gt.bbox) >= 0.5)
      return true;
  }
  return false;
}

}  // namespace

AsrResult compute_asr(const DetectionSet& benign, const DetectionSet& adversarial,
                      const GroundTruth& gt, const std::string& target_class,
                      double confidence_floor) {
  for (const auto& [view, entry] : gt) {
    require(benign.count(view) != 0, "compute_asr: benign detections missing view " + view);
    require(adversarial.count(view) != 0,
            "compute_asr: adversarial detections missing view " + view);
  }

  AsrResult result;
  for (const auto& [view, entry] : gt) {
    if (entry.klass != target_class) continue;
    if (!has_target_hit(benign.at(view), entry, target_class, confidence_floor)) continue;
    ++result.total;
    if (!has_target_hit(adversarial.at(view), entry, target_class, confidence_floor)) {
      ++result.successes;
    }
  }
  if (result.total == 0) {
    throw std::runtime_error(
        "compute_asr: no benign detections of class '" + target_class +
        "' pass the confidence floor; ASR is undefined");
  }
  result.asr_percent = 100.0 * result.successes / result.total;
  return result;
}

ApAr compute_ap_ar(const DetectionSet& dets, const GroundTruth& gt,
                   const std::string& target_class, double iou_threshold) {
  size_t n_gt = 0;
  for (const auto& [view, entry] : gt) {
    if (entry.klass == target_class) ++n_gt;
  }
  require(n_gt > 0, "compute_ap_ar: ground truth has no instances of class " + target_class);

  struct Candidate {
    double confidence;
    std::string view;
    Box2D bbox;
  };
  std::vector<Candidate> candidates;
  for (const auto& [view, list] : dets) {
    for (const Detection& d : list) {
      if (d.klass == target_class) candidates.push_back({d.confidence, view, d.bbox});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.view != b.view) return a.view < b.view;
    if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
    return a.bbox.y < b.bbox.y;
  });

  std::map<std::string, bool> matched;
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (const Candidate& c : candidates) {
    const auto it = gt.find(c.view);
    bool is_tp = false;
    if (it != gt.end() && it->second.klass == target_class && !matched[c.view] &&
        iou(c.bbox, it->second.bbox) >= iou_threshold) {
      is_tp = true;
      matched[c.view] = true;
    }
    is_tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }

  ApAr out;
  if (precision.empty()) return out;

  // All-points interpolation: precision envelope, exact area under the curve.
  std::vector<double> envelope = precision;
  for (int i = static_cast<int>(envelope.size()) - 2; i >= 0; --i) {
    envelope[i] = std::max(envelope[i], envelope[i + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < envelope.size(); ++i) {
    ap += (recall[i] - prev_recall) * envelope[i];
    prev_recall = recall[i];
  }
  out.ap = ap;
  out.ar = recall.back();
  return out;
}

std::pair<double, double> delta_ap(const ApAr& benign, const ApAr& adversarial) {
  const auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
  return {round3(adversarial.ap - benign.ap), round3(adversarial.ar - benign.ar)};
}

ToyDetectorConfig default_toy_detector() {
  ToyDetectorConfig cfg;
  cfg.classes["car"] = {Vec3(0.10, 0.20, 0.80), 0.40};
  cfg.classes["car-red"] = {Vec3(0.80, 0.12, 0.10), 0.32};
  cfg.classes["stop-sign"] = {Vec3(0.75, 0.08, 0.08), 0.30};
  cfg.classes["road"] = {Vec3(0.42, 0.42, 0.42), 0.22};
  cfg.classes["grass"] = {Vec3(0.14, 0.47, 0.14), 0.28};
  cfg.classes["clock"] = {Vec3(0.92, 0.92, 0.88), 0.20};
  cfg.classes["soccer"] = {Vec3(0.50, 0.50, 0.50), 0.14};
  return cfg;
}

namespace {

struct PixelLabel {
  int klass = -1;  // index into the ordered class list
  double score = 0.0;
};

std::vector<std::string> ordered_classes(const ToyDetectorConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.classes.size());
  for (const auto& [name, sig] : cfg.classes) names.push_back(name);
  return names;
}

std::vector<PixelLabel> label_pixels(const Image& view, const ToyDetectorConfig& cfg,
                                     const std::vector<std::string>& names) {
  std::vector<PixelLabel> labels(static_cast<size_t>(view.width()) * view.height());
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      const Vec3 rgb = view.rgb(x, y);
      PixelLabel best;
      for (size_t k = 0; k < names.size(); ++k) {
        const ClassSignature& sig = cfg.classes.at(names[k]);
        const double score = 1.0 - (rgb - sig.color).norm() / sig.tolerance;
        if (score > best.score) {
          best.klass = static_cast<int>(k);
          best.score = score;
        }
      }
      labels[static_cast<size_t>(y) * view.width() + x] = best;
    }
  }
  return labels;
}

}  // namespace

std::vector<Detection> toy_detect(const Image& view, const ToyDetectorConfig& cfg) {
  require(!cfg.classes.empty(), "toy detector needs a nonempty class palette");
  const std::vector<std::string> names = ordered_classes(cfg);
  const std::vector<PixelLabel> labels = label_pixels(view, cfg, names);
  const int w = view.width(), h = view.height();

  std::vector<Detection> detections;
  std::vector<char> visited(labels.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t start = static_cast<size_t>(y) * w + x;
      if (visited[start] || labels[start].klass < 0) continue;

      // 4-connected flood fill over pixels sharing this class.
      const int klass = labels[start].klass;
      std::deque<std::pair<int, int>> queue{{x, y}};
      visited[start] = 1;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      int area = 0;
      double score_sum = 0.0;
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        const size_t ci = static_cast<size_t>(cy) * w + cx;
        ++area;
        score_sum += labels[ci].score;
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const size_t ni = static_cast<size_t>(ny) * w + nx;
          if (visited[ni] || labels[ni].klass != klass) continue;
          visited[ni] = 1;
          queue.emplace_back(nx, ny);
        }
      }
      if (area < cfg.min_area) continue;
      Detection det;
      det.bbox = Box2D{static_cast<double>(x0), static_cast<double>(y0),
                       static_cast<double>(x1 - x0 + 1), static_cast<double>(y1 - y0 + 1)};
      det.klass = names[klass];
      det.confidence = std::clamp(score_sum / area, 0.0, 1.0);
      detections.push_back(std::move(det));
    }
  }
  return detections;
}

std::pair<std::string, double> classify_region(const Image& view, const Box2D& box,
                                               const ToyDetectorConfig& cfg) {
  const std::vector<std::string> names = ordered_classes(cfg);
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(view.width(), static_cast<int>(std::ceil(box.x1())));
  const int y1 = std::min(view.height(), static_cast<int>(std::ceil(box.y1())));
  require(x1 > x0 && y1 > y0, "classify_region: box does not intersect the image");

  std::vector<double> score_sum(names.size(), 0.0);
  std::vector<int> votes(names.size(), 0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const Vec3 rgb = view.rgb(x, y);
      int best = -1;
      double best_score = 0.0;
      for (size_t k = 0; k < names.size(); ++k) {
        const ClassSignature& sig = cfg.classes.at(names[k]);
        const double score = 1.0 - (rgb - sig.color).norm() / sig.tolerance;
        if (score > best_score) {
          best = static_cast<int>(k);
          best_score = score;
        }
      }
      if (best >= 0) {
        votes[best] += 1;
        score_sum[best] += best_score;
      }
    }
  }
  int winner = -1;
  for (size_t k = 0; k < names.size(); ++k) {
    if (winner < 0 || votes[k] > votes[winner]) winner = static_cast<int>(k);
  }
  if (winner < 0 || votes[winner] == 0) return {"", 0.0};
  return {names[winner], score_sum[winner] / votes[winner]};
}

nlohmann::json detections_to_json(const DetectionSet& dets) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [view, list] : dets) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Detection& d : list) {
      arr.push_back(nlohmann::json{{"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                                   {"class", d.klass},
                                   {"confidence", d.confidence}});
    }
    doc[view] = std::move(arr);
  }
  return doc;
}

DetectionSet detections_from_json(const nlohmann::json& j) {
  DetectionSet dets;
  for (const auto& [view, arr] : j.items()) {
    std::vector<Detection> list;
    for (const auto& jd : arr) {
      Detection d;
      d.bbox = Box2D{jd.at("bbox").at(0).get<double>(), jd.at("bbox").at(1).get<double>(),
                     jd.at("bbox").at(2).get<double>(), jd.at("bbox").at(3).get<double>()};
      d.klass = jd.at("class").get<std::string>();
      d.confidence = jd.at("confidence").get<double>();
      list.push_back(std::move(d));
    }
    dets[view] = std::move(list);
  }
  return dets;
}

void save_detections(const DetectionSet& dets, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << detections_to_json(dets).dump(2) << "\n";
}

DetectionSet load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("detections parse error in " + path + ": " + e.what());
  }
  try {
    return detections_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("detections parse error in " + path + ": " + e.what());
  }
}

}  // namespace splatcamo
