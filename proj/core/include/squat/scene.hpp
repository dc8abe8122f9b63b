#pragma once

#include <cstdint>
#include <vector>

#include "squat/errors.hpp"

namespace squat {

// Axis-aligned box, coordinates normalized to [0, 1], x1 < x2 and y1 < y2.
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};

double box_area(const Box& b);
double box_iou(const Box& a, const Box& b);
Box box_union(const Box& a, const Box& b);

struct Detection {
  Box box;
  std::vector<double> visual;        // pooled appearance feature
  std::vector<double> class_scores;  // one entry per object class, sums to 1
};

struct GtObject {
  Box box;
  int class_id = 0;
};

// predicate ids start at 1; 0 is reserved for "no relation".
struct GtRelation {
  int subject = 0;
  int object = 0;
  int predicate = 0;
};

struct SceneInstance {
  std::int64_t image_id = 0;
  std::vector<Detection> detections;
  std::vector<GtObject> gt_objects;
  std::vector<GtRelation> gt_relations;
};

// Throws DataError on any structural violation (box bounds, score sums,
// dangling relation endpoints, duplicate ordered pairs, predicate range).
void validate_scene(const SceneInstance& scene, int num_object_classes, int num_predicates,
                    int feature_dim);

// Directed edge between detection slots; every ordered pair (i, j), i != j.
struct EdgeIndex {
  int subject = 0;
  int object = 0;
};

inline bool operator==(const EdgeIndex& a, const EdgeIndex& b) {
  return a.subject == b.subject && a.object == b.object;
}

// Canonical edge enumeration: lexicographic by (subject, object).
std::vector<EdgeIndex> edge_list(int n);
int edge_count(int n);
// Position of (subject, object) in edge_list(n).
int edge_position(int subject, int object, int n);

int argmax_class(const Detection& d);

// Input regime for one run.
//   kPredCls: GT boxes and GT labels; kSgCls: GT boxes, noisy labels;
//   kSgDet: raw detections including distractors.
enum class Task { kPredCls, kSgCls, kSgDet };

const char* to_string(Task t);
Task task_from_string(const std::string& s);

// Materializes the detections the model actually consumes for a task. The
// GT-box modes rebuild one detection per GT object, borrowing appearance
// (and, for kSgCls, class scores) from the best-overlapping raw detection.
std::vector<Detection> task_inputs(const SceneInstance& scene, Task task);

}  // namespace squat
