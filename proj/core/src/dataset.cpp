#include "squat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace squat {

namespace {

using nlohmann::json;

int distractor_count(double rate, int n_objects) {
  return static_cast<int>(std::llround(rate / (1.0 - rate) * n_objects));
}

double related_pair_probability(const SynthConfig& c, int n_objects) {
  const int total = n_objects + distractor_count(c.distractor_rate, n_objects);
  return c.relation_density * total * (total - 1) / (static_cast<double>(n_objects) * (n_objects - 1));
}

Box sample_box(Rng& rng) {
  const double cx = rng.uniform(0.1, 0.9);
  const double cy = rng.uniform(0.1, 0.9);
  const double w = rng.uniform(0.05, 0.35);
  const double h = rng.uniform(0.05, 0.35);
  Box b;
  b.x1 = std::max(0.0, cx - w / 2);
  b.x2 = std::min(1.0, cx + w / 2);
  b.y1 = std::max(0.0, cy - h / 2);
  b.y2 = std::min(1.0, cy + h / 2);
  return b;
}

double clamp_span(double lo, double hi, double& out_lo, double& out_hi) {
  if (lo > hi) std::swap(lo, hi);
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (hi - lo < 1e-3) {
    const double mid = std::clamp((lo + hi) / 2, 5e-4, 1.0 - 5e-4);
    lo = mid - 5e-4;
    hi = mid + 5e-4;
  }
  out_lo = lo;
  out_hi = hi;
  return hi - lo;
}

Box jitter_box(const Box& b, double scale, Rng& rng) {
  const double w = b.x2 - b.x1, h = b.y2 - b.y1;
  Box j;
  const double x1 = b.x1 + rng.normal(0.0, scale * w);
  const double x2 = b.x2 + rng.normal(0.0, scale * w);
  const double y1 = b.y1 + rng.normal(0.0, scale * h);
  const double y2 = b.y2 + rng.normal(0.0, scale * h);
  clamp_span(x1, x2, j.x1, j.x2);
  clamp_span(y1, y2, j.y1, j.y2);
  return j;
}

// Mixture of a one-hot row and normalized uniform noise; sums to 1.
std::vector<double> noisy_scores(int true_class, double mix, int classes, Rng& rng) {
  std::vector<double> noise(static_cast<std::size_t>(classes));
  double sum = 0.0;
  for (double& v : noise) {
    v = rng.uniform01() + 1e-9;
    sum += v;
  }
  std::vector<double> scores(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    scores[static_cast<std::size_t>(c)] = mix * noise[static_cast<std::size_t>(c)] / sum +
                                          (c == true_class ? 1.0 - mix : 0.0);
  }
  return scores;
}

int displacement_side(const Box& subject, const Box& object) {
  const double dx = (object.x1 + object.x2) - (subject.x1 + subject.x2);
  return dx >= 0.0 ? 1 : 0;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_scenes < 1) throw ConfigError("num_scenes must be >= 1");
  if (min_objects < 2 || max_objects < min_objects) {
    throw ConfigError("object count range needs 2 <= min <= max, got [" + std::to_string(min_objects) +
                      ", " + std::to_string(max_objects) + "]");
  }
  if (num_object_classes < 1) throw ConfigError("num_object_classes must be >= 1");
  if (num_predicates < 1) throw ConfigError("num_predicates must be >= 1");
  {
    const int rule_groups = num_object_classes >= 2 ? 2 : 1;
    const int rule_cells = rule_groups * rule_groups * 2;
    const int base = num_predicates >= 2 ? num_predicates - 1 : num_predicates;
    if (base > rule_cells) {
      throw ConfigError("num_predicates " + std::to_string(num_predicates) +
                        " exceeds the hidden rule's capacity of " + std::to_string(rule_cells + 1) +
                        " predicates");
    }
  }
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (!(relation_density > 0.0 && relation_density <= 1.0)) {
    throw ConfigError("relation_density must lie in (0, 1]");
  }
  if (!(distractor_rate >= 0.0 && distractor_rate < 1.0)) {
    throw ConfigError("distractor_rate must lie in [0, 1)");
  }
  if (!(rule_noise >= 0.0 && rule_noise < 1.0)) throw ConfigError("rule_noise must lie in [0, 1)");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ConfigError("label_noise must lie in [0, 1]");
  if (!(feature_noise >= 0.0)) throw ConfigError("feature_noise must be >= 0");
  if (!(box_jitter >= 0.0)) throw ConfigError("box_jitter must be >= 0");
  if (!(predicate_skew >= 0.0)) throw ConfigError("predicate_skew must be >= 0");
  for (int n = min_objects; n <= max_objects; ++n) {
    if (related_pair_probability(*this, n) > 1.0) {
      throw ConfigError("relation_density " + std::to_string(relation_density) +
                        " is infeasible: a scene with " + std::to_string(n) +
                        " objects cannot host that many relations among real pairs");
    }
  }
}

std::vector<SceneInstance> synthesize(const SynthConfig& config) {
  config.validate();
  const Rng root(config.seed);
  const int classes = config.num_object_classes;
  const int predicates = config.num_predicates;

  // Hidden rule: classes are partitioned into two behaviour groups, and the
  // predicate of a related pair is a power-law-weighted function of
  // (subject group, object group, horizontal displacement side). Grouping
  // keeps the rule table small enough to learn from a few thousand relations
  // while still depending on both endpoint classes and their relative
  // placement. When more than one predicate exists, the last one is served
  // only by one exact (subject class, object class) pair, giving it a
  // long-tail share of roughly 1/classes^2 of all relations.
  Rng rule_rng = root.split("synth.rule");
  const int groups = classes >= 2 ? 2 : 1;
  std::vector<int> group_of(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) group_of[static_cast<std::size_t>(c)] = c;
  rule_rng.shuffle(group_of);
  for (int c = 0; c < classes; ++c) {
    group_of[static_cast<std::size_t>(c)] = group_of[static_cast<std::size_t>(c)] * groups / classes;
  }
  const int base_predicates = predicates >= 2 ? predicates - 1 : predicates;
  std::vector<double> skew_weights(static_cast<std::size_t>(base_predicates));
  for (int p = 1; p <= base_predicates; ++p) {
    skew_weights[static_cast<std::size_t>(p - 1)] = std::pow(static_cast<double>(p), -config.predicate_skew);
  }
  const int cells = groups * groups * 2;
  std::vector<int> rule(static_cast<std::size_t>(cells));
  std::vector<int> usage(static_cast<std::size_t>(base_predicates) + 1, 0);
  for (int& cell : rule) {
    cell = 1 + static_cast<int>(rule_rng.weighted_index(skew_weights));
    usage[static_cast<std::size_t>(cell)]++;
  }
  for (int p = 1; p <= base_predicates; ++p) {
    while (usage[static_cast<std::size_t>(p)] == 0) {
      const auto cell = static_cast<std::size_t>(rule_rng.uniform_int(0, cells - 1));
      if (usage[static_cast<std::size_t>(rule[cell])] < 2) continue;
      usage[static_cast<std::size_t>(rule[cell])]--;
      rule[cell] = p;
      usage[static_cast<std::size_t>(p)]++;
    }
  }
  const int tail_subject = static_cast<int>(rule_rng.uniform_int(0, classes - 1));
  const int tail_object = static_cast<int>(rule_rng.uniform_int(0, classes - 1));
  auto rule_at = [&](int subject_class, int object_class, int side) {
    if (predicates >= 2 && subject_class == tail_subject && object_class == tail_object) {
      return predicates;
    }
    const int sg = group_of[static_cast<std::size_t>(subject_class)];
    const int og = group_of[static_cast<std::size_t>(object_class)];
    return rule[static_cast<std::size_t>((sg * groups + og) * 2 + side)];
  };

  // Class embeddings; classes in the same behaviour group share a base
  // signature plus a class-specific offset, so group membership is visible in
  // the features rather than requiring pure memorization. The extra row is
  // the background signature distractors are drawn around.
  Rng embed_rng = root.split("synth.embed");
  std::vector<std::vector<double>> group_base(static_cast<std::size_t>(groups));
  for (auto& b : group_base) {
    b.resize(static_cast<std::size_t>(config.feature_dim));
    for (double& v : b) v = embed_rng.normal();
  }
  std::vector<std::vector<double>> embeddings(static_cast<std::size_t>(classes) + 1);
  for (int c = 0; c < classes; ++c) {
    auto& e = embeddings[static_cast<std::size_t>(c)];
    const auto& base = group_base[static_cast<std::size_t>(group_of[static_cast<std::size_t>(c)])];
    e.resize(static_cast<std::size_t>(config.feature_dim));
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = base[k] + 0.5 * embed_rng.normal();
  }
  auto& background = embeddings.back();
  background.resize(static_cast<std::size_t>(config.feature_dim));
  for (double& v : background) v = embed_rng.normal();

  const Rng stream = root.split("synth.scenes." + config.split_name);
  std::vector<SceneInstance> scenes;
  scenes.reserve(static_cast<std::size_t>(config.num_scenes));
  for (int s = 0; s < config.num_scenes; ++s) {
    Rng rng = stream.split(static_cast<std::uint64_t>(s));
    SceneInstance scene;
    scene.image_id = config.image_id_base + s;
    const int n = static_cast<int>(rng.uniform_int(config.min_objects, config.max_objects));
    const int extras = distractor_count(config.distractor_rate, n);
    const double p_rel = related_pair_probability(config, n);

    scene.gt_objects.resize(static_cast<std::size_t>(n));
    for (GtObject& obj : scene.gt_objects) {
      obj.class_id = static_cast<int>(rng.uniform_int(0, classes - 1));
      obj.box = sample_box(rng);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || !rng.bernoulli(p_rel)) continue;
        const GtObject& subj = scene.gt_objects[static_cast<std::size_t>(i)];
        const GtObject& obj = scene.gt_objects[static_cast<std::size_t>(j)];
        int predicate = rule_at(subj.class_id, obj.class_id, displacement_side(subj.box, obj.box));
        if (rng.bernoulli(config.rule_noise)) {
          predicate = static_cast<int>(rng.uniform_int(1, predicates));
        }
        scene.gt_relations.push_back({i, j, predicate});
      }
    }

    scene.detections.reserve(static_cast<std::size_t>(n + extras));
    for (int i = 0; i < n; ++i) {
      const GtObject& obj = scene.gt_objects[static_cast<std::size_t>(i)];
      Detection det;
      det.box = jitter_box(obj.box, config.box_jitter, rng);
      det.visual = embeddings[static_cast<std::size_t>(obj.class_id)];
      for (double& v : det.visual) v += config.feature_noise * rng.normal();
      det.class_scores = noisy_scores(obj.class_id, config.label_noise, classes, rng);
      scene.detections.push_back(std::move(det));
    }
    for (int i = 0; i < extras; ++i) {
      Detection det;
      det.box = sample_box(rng);
      det.visual = embeddings[static_cast<std::size_t>(classes)];
      for (double& v : det.visual) v += config.feature_noise * rng.normal();
      const int fake_class = static_cast<int>(rng.uniform_int(0, classes - 1));
      det.class_scores = noisy_scores(fake_class, 0.5, classes, rng);
      scene.detections.push_back(std::move(det));
    }
    rng.shuffle(scene.detections);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

namespace {

json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be an array of 4 numbers");
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json scene_to_json(const SceneInstance& scene) {
  json dets = json::array();
  for (const Detection& d : scene.detections) {
    dets.push_back({{"box", box_to_json(d.box)}, {"visual", d.visual}, {"class_scores", d.class_scores}});
  }
  json objs = json::array();
  for (const GtObject& o : scene.gt_objects) {
    objs.push_back({{"box", box_to_json(o.box)}, {"class_id", o.class_id}});
  }
  json rels = json::array();
  for (const GtRelation& r : scene.gt_relations) {
    rels.push_back(json::array({r.subject, r.object, r.predicate}));
  }
  return {{"image_id", scene.image_id},
          {"detections", dets},
          {"gt_objects", objs},
          {"gt_relations", rels}};
}

SceneInstance scene_from_json(const json& j) {
  SceneInstance scene;
  scene.image_id = j.at("image_id").get<std::int64_t>();
  for (const json& d : j.at("detections")) {
    Detection det;
    det.box = box_from_json(d.at("box"));
    det.visual = d.at("visual").get<std::vector<double>>();
    det.class_scores = d.at("class_scores").get<std::vector<double>>();
    scene.detections.push_back(std::move(det));
  }
  for (const json& o : j.at("gt_objects")) {
    scene.gt_objects.push_back({box_from_json(o.at("box")), o.at("class_id").get<int>()});
  }
  for (const json& r : j.at("gt_relations")) {
    if (!r.is_array() || r.size() != 3) throw DataError("gt_relations entries must be [subject, object, predicate]");
    scene.gt_relations.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>()});
  }
  return scene;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<SceneInstance>& scenes,
                   const DatasetHeader& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  const json head = {{"format", "squat-dataset"},
                     {"version", header.version},
                     {"feature_dim", header.feature_dim},
                     {"num_object_classes", header.num_object_classes},
                     {"num_predicates", header.num_predicates}};
  out << head.dump() << '\n';
  for (const SceneInstance& scene : scenes) out << scene_to_json(scene).dump() << '\n';
  if (!out) throw DataError("write to " + path + " failed");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Dataset ds;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("format", "") != "squat-dataset") {
          throw DataError("first line must be a squat-dataset header");
        }
        ds.header.version = j.at("version").get<int>();
        if (ds.header.version != 1) {
          throw DataError("unsupported dataset version " + std::to_string(ds.header.version));
        }
        ds.header.feature_dim = j.at("feature_dim").get<int>();
        ds.header.num_object_classes = j.at("num_object_classes").get<int>();
        ds.header.num_predicates = j.at("num_predicates").get<int>();
        have_header = true;
        continue;
      }
      SceneInstance scene = scene_from_json(j);
      validate_scene(scene, ds.header.num_object_classes, ds.header.num_predicates,
                     ds.header.feature_dim);
      ds.scenes.push_back(std::move(scene));
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  if (!have_header) throw DataError(path + ": missing dataset header line");
  return ds;
}

}  // namespace squat
