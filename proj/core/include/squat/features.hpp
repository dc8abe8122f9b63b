#pragma once

#include "squat/nn.hpp"
#include "squat/scene.hpp"

namespace squat {

// Node and edge feature construction. Each detection i becomes
//   f_i = W_o [W_v v_i ; W_g b_i]
// and every ordered pair (i, j), i != j, becomes
//   f_ij = W_p [f_i ; f_j]
// with all maps affine and the pair list in canonical order.
struct ExtractionParams {
  Linear wv;  // d_v -> d_h, appearance
  Linear wg;  // 4 -> d_g, box geometry
  Linear wo;  // d_h + d_g -> d
  Linear wp;  // 2d -> d, ordered pair fusion

  static ExtractionParams init(int d_v, int d_h, int d_g, int d, Rng& rng, bool bias);
  int feature_dim() const { return wo.out_dim(); }
};

struct FeatureBundle {
  Tensor nodes;                  // [n x d]
  Tensor edges;                  // [n(n-1) x d]
  std::vector<EdgeIndex> pairs;  // canonical order, pairs[k] produced edges row k
};

// n >= 1. Rejects detections whose feature width disagrees with the params.
Tensor node_features(Tape& tape, const std::vector<Detection>& detections, const ExtractionParams& params);

// n >= 2 (needs at least one ordered pair).
FeatureBundle edge_features(Tape& tape, const Tensor& nodes, const ExtractionParams& params);

FeatureBundle build_features(Tape& tape, const std::vector<Detection>& detections,
                             const ExtractionParams& params);

}  // namespace squat
