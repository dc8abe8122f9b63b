#include "squat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace squat {

double box_area(const Box& b) {
  return std::max(0.0, b.x2 - b.x1) * std::max(0.0, b.y2 - b.y1);
}

double box_iou(const Box& a, const Box& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  if (inter <= 0.0) return 0.0;
  const double uni = box_area(a) + box_area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box box_union(const Box& a, const Box& b) {
  return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

namespace {

void check_box(const Box& b, const std::string& what) {
  const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2);
  if (!finite || b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > 1.0 || b.y2 > 1.0 || b.x1 >= b.x2 || b.y1 >= b.y2) {
    throw DataError(what + ": box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1");
  }
}

}  // namespace

void validate_scene(const SceneInstance& scene, int num_object_classes, int num_predicates,
                    int feature_dim) {
  const std::string tag = "image " + std::to_string(scene.image_id);
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const Detection& d = scene.detections[i];
    check_box(d.box, tag + ", detection " + std::to_string(i));
    if (static_cast<int>(d.visual.size()) != feature_dim) {
      throw DataError(tag + ", detection " + std::to_string(i) + ": visual feature has " +
                      std::to_string(d.visual.size()) + " dims, header says " + std::to_string(feature_dim));
    }
    if (static_cast<int>(d.class_scores.size()) != num_object_classes) {
      throw DataError(tag + ", detection " + std::to_string(i) + ": class_scores has " +
                      std::to_string(d.class_scores.size()) + " entries, header says " +
                      std::to_string(num_object_classes));
    }
    double sum = 0.0;
    for (double s : d.class_scores) {
      if (!(s >= 0.0)) throw DataError(tag + ", detection " + std::to_string(i) + ": negative class score");
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DataError(tag + ", detection " + std::to_string(i) + ": class scores sum to " + std::to_string(sum));
    }
  }
  for (std::size_t i = 0; i < scene.gt_objects.size(); ++i) {
    const GtObject& o = scene.gt_objects[i];
    check_box(o.box, tag + ", gt object " + std::to_string(i));
    if (o.class_id < 0 || o.class_id >= num_object_classes) {
      throw DataError(tag + ", gt object " + std::to_string(i) + ": class " + std::to_string(o.class_id) +
                      " out of range");
    }
  }
  std::set<std::pair<int, int>> seen;
  const int n = static_cast<int>(scene.gt_objects.size());
  for (std::size_t r = 0; r < scene.gt_relations.size(); ++r) {
    const GtRelation& rel = scene.gt_relations[r];
    if (rel.subject < 0 || rel.subject >= n || rel.object < 0 || rel.object >= n || rel.subject == rel.object) {
      throw DataError(tag + ", relation " + std::to_string(r) + ": endpoints (" + std::to_string(rel.subject) +
                      ", " + std::to_string(rel.object) + ") invalid for " + std::to_string(n) + " objects");
    }
    if (rel.predicate < 1 || rel.predicate > num_predicates) {
      throw DataError(tag + ", relation " + std::to_string(r) + ": predicate " + std::to_string(rel.predicate) +
                      " out of range [1, " + std::to_string(num_predicates) + "]");
    }
    if (!seen.insert({rel.subject, rel.object}).second) {
      throw DataError(tag + ", relation " + std::to_string(r) + ": duplicate ordered pair (" +
                      std::to_string(rel.subject) + ", " + std::to_string(rel.object) + ")");
    }
  }
}

std::vector<EdgeIndex> edge_list(int n) {
  std::vector<EdgeIndex> edges;
  edges.reserve(static_cast<std::size_t>(edge_count(n)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) edges.push_back({i, j});
    }
  }
  return edges;
}

int edge_count(int n) { return n > 1 ? n * (n - 1) : 0; }

int edge_position(int subject, int object, int n) {
  if (subject < 0 || subject >= n || object < 0 || object >= n || subject == object) {
    throw ContractError("edge_position: invalid pair (" + std::to_string(subject) + ", " +
                        std::to_string(object) + ") for n=" + std::to_string(n));
  }
  return subject * (n - 1) + (object < subject ? object : object - 1);
}

int argmax_class(const Detection& d) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(d.class_scores.size()); ++c) {
    if (d.class_scores[c] > d.class_scores[best]) best = c;
  }
  return best;
}

const char* to_string(Task t) {
  switch (t) {
    case Task::kPredCls: return "predcls";
    case Task::kSgCls: return "sgcls";
    case Task::kSgDet: return "sgdet";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "predcls") return Task::kPredCls;
  if (s == "sgcls") return Task::kSgCls;
  if (s == "sgdet") return Task::kSgDet;
  throw ConfigError("unknown task '" + s + "' (expected predcls|sgcls|sgdet)");
}

namespace {

// Best-IoU raw detection for a GT box; -1 when nothing overlaps.
int best_detection_for(const SceneInstance& scene, const Box& box) {
  int best = -1;
  double best_iou = 0.0;
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const double iou = box_iou(scene.detections[i].box, box);
    if (iou > best_iou) {
      best_iou = iou;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

std::vector<Detection> task_inputs(const SceneInstance& scene, Task task) {
  if (task == Task::kSgDet) return scene.detections;
  if (scene.detections.empty()) {
    throw DataError("task_inputs: image " + std::to_string(scene.image_id) +
                    " has no detections to borrow appearance from");
  }
  const std::size_t d_v = scene.detections[0].visual.size();
  int num_classes = 0;
  for (const Detection& d : scene.detections) {
    num_classes = std::max(num_classes, static_cast<int>(d.class_scores.size()));
  }
  for (const GtObject& o : scene.gt_objects) num_classes = std::max(num_classes, o.class_id + 1);

  std::vector<Detection> inputs;
  inputs.reserve(scene.gt_objects.size());
  for (const GtObject& obj : scene.gt_objects) {
    Detection det;
    det.box = obj.box;
    const int src = best_detection_for(scene, obj.box);
    if (src >= 0) {
      det.visual = scene.detections[static_cast<std::size_t>(src)].visual;
    } else {
      det.visual.assign(d_v, 0.0);
    }
    if (task == Task::kSgCls && src >= 0) {
      det.class_scores = scene.detections[static_cast<std::size_t>(src)].class_scores;
    } else {
      det.class_scores.assign(static_cast<std::size_t>(num_classes), 0.0);
      det.class_scores[static_cast<std::size_t>(obj.class_id)] = 1.0;
    }
    inputs.push_back(std::move(det));
  }
  return inputs;
}

}  // namespace squat
