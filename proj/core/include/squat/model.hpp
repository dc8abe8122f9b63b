#pragma once

#include <functional>
#include <string>

#include "squat/attention.hpp"
#include "squat/esm.hpp"
#include "squat/features.hpp"
#include "squat/scene.hpp"

namespace squat {

// Where the edge-update index sets come from at run time.
enum class EdgeSource { kNone, kFull, kEsm, kOracle };

const char* to_string(EdgeSource s);
EdgeSource edge_source_from_string(const std::string& s);
const char* to_string(EsmMode m);
EsmMode esm_mode_from_string(const std::string& s);
// "N2N,N2E,E2N,E2E" subsets; the empty set renders as "none".
std::string to_string(const AttentionMask& mask);
AttentionMask attention_mask_from_string(const std::string& s);

struct ModelConfig {
  int d_v = 32;          // appearance feature width
  int d_h = 48;          // appearance projection
  int d_g = 16;          // geometry projection
  int d = 64;            // shared hidden width
  int heads = 8;
  int layers = 3;        // quad rounds; 3 for sgdet, 2 for predcls/sgcls
  int mlp_ratio = 4;
  int esm_hidden = 0;    // selector hidden width m; 0 means d / 2
  int num_object_classes = 8;
  int num_predicates = 6;  // classifier emits num_predicates + 1, slot 0 = background
  bool bias = true;
  double ln_eps = 1e-5;
  EsmMode esm_mode = EsmMode::kDistinct;
  AttentionMask mask;

  int esm_m() const { return esm_hidden > 0 ? esm_hidden : d / 2; }
  int classifier_outputs() const { return num_predicates + 1; }
  void validate() const;  // throws ConfigError
};

struct ClassifierParams {
  Linear fc1;  // d -> d
  Linear fc2;  // d -> num_predicates + 1

  static ClassifierParams init(int d, int outputs, Rng& rng, bool bias);
  Tensor apply(Tape& tape, const Tensor& x) const;
};

struct ModelParams {
  ModelConfig config;
  ExtractionParams feat;
  EsmBank esms;
  std::vector<QuadLayerParams> layers;
  ClassifierParams classifier;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
};

// Canonical named traversal: checkpoint layout, optimizer iteration and
// gradient-check grouping all share this order. Tensor handles share storage
// with the model, so writes through them mutate the model.
void visit_params(const ModelParams& params,
                  const std::function<void(const std::string& name, Tensor tensor)>& fn);
std::size_t parameter_count(const ModelParams& params);
void zero_all_grads(const ModelParams& params);

struct ForwardResult {
  Tensor logits;  // [|E| x (P+1)]
  Tensor probs;   // softmax rows of logits
  LayerState state;
};

// Runs the configured number of quad rounds over the bundle, updating only
// the selected edges, then classifies every edge row.
ForwardResult forward_quad(Tape& tape, const FeatureBundle& bundle, const Selections& selections,
                           const ModelParams& params);

struct PipelineResult {
  FeatureBundle bundle;
  EsmScores scores;       // defined when the selector heads were scored
  Selections selections;  // the index sets the forward actually used
  ForwardResult out;
};

// Feature construction, edge selection per `source`, quad forward, classify.
// `oracle_edges` backs kOracle (may be empty, degrading to kNone for the
// scene); `score_esms` forces selector scoring even when selections come
// from elsewhere, so the selector loss stays defined.
PipelineResult run_pipeline(Tape& tape, const std::vector<Detection>& detections,
                            const ModelParams& params, double rho, EdgeSource source,
                            const std::vector<int>& oracle_edges, bool score_esms);

}  // namespace squat
