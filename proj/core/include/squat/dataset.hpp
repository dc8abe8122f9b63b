#pragma once

#include <cstdint>
#include <string>

#include "squat/rng.hpp"
#include "squat/scene.hpp"

namespace squat {

// Synthetic scene generator. Scenes are learnable by construction: each
// object class owns a feature embedding, and the predicate linking a related
// pair is a hidden deterministic function of (subject class, object class,
// relative displacement quadrant), corrupted by `rule_noise`. Distractor
// detections carry background-like features and never join a GT relation.
struct SynthConfig {
  int num_scenes = 200;
  int min_objects = 4;
  int max_objects = 10;
  int num_object_classes = 8;
  int num_predicates = 6;
  int feature_dim = 32;
  double relation_density = 0.10;  // expected GT relations / detection pairs
  double distractor_rate = 0.30;   // fraction of detections that are background
  double predicate_skew = 2.0;     // power-law exponent over predicate ids
  double rule_noise = 0.05;        // chance a relation ignores the hidden rule
  double feature_noise = 0.30;     // stddev around the class embedding
  double label_noise = 0.20;       // mass spread off the true class in scores
  double box_jitter = 0.03;        // detection box perturbation scale
  std::uint64_t seed = 7;
  // Scene-stream label; the hidden rule and the class embeddings depend only
  // on the seed, so differently named streams share the same world.
  std::string split_name = "train";
  std::int64_t image_id_base = 1;

  void validate() const;  // throws ConfigError
};

std::vector<SceneInstance> synthesize(const SynthConfig& config);

struct DatasetHeader {
  int version = 1;
  int feature_dim = 0;
  int num_object_classes = 0;
  int num_predicates = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<SceneInstance> scenes;
};

// Newline-delimited JSON: one header line, then one scene per line. Doubles
// serialize with round-trip precision, so read(write(x)) == x exactly.
void write_dataset(const std::string& path, const std::vector<SceneInstance>& scenes,
                   const DatasetHeader& header);

// Throws DataError naming the line for any malformed or invalid content.
Dataset read_dataset(const std::string& path);

}  // namespace squat
