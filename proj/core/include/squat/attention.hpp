#pragma once

#include "squat/nn.hpp"

namespace squat {

// Multi-head attention with per-head projection matrices and a shared output
// map. Scores are scaled by 1/sqrt(d_k) and softmaxed over the key axis.
struct MhaParams {
  std::vector<Linear> wq;  // one d -> d_k map per head
  std::vector<Linear> wk;
  std::vector<Linear> wv;
  Linear wo;               // h * d_k -> d

  static MhaParams init(int d, int heads, Rng& rng, bool bias);
  int heads() const { return static_cast<int>(wq.size()); }
  int key_dim() const { return wq.empty() ? 0 : wq[0].out_dim(); }
};

// query [a x d], keys/values [b x d] with b >= 1. Callers must guard empty
// key sets (an empty pool means the attention term is skipped upstream).
Tensor mha(Tape& tape, const Tensor& query, const Tensor& keys, const Tensor& values,
           const MhaParams& params);

// Eval/train-time switches for the four cross-stream attention terms.
struct AttentionMask {
  bool n2n = true;
  bool n2e = true;
  bool e2n = true;
  bool e2e = true;
};

struct QuadLayerParams {
  MhaParams node_self;  // nodes attending to nodes before the cross terms
  MhaParams edge_self;  // selected edges attending among themselves
  MhaParams n2n;
  MhaParams n2e;
  MhaParams e2n;
  MhaParams e2e;
  LayerNormParams ln_node_self;
  LayerNormParams ln_edge_self;
  LayerNormParams ln_node_cross;
  LayerNormParams ln_edge_cross;
  LayerNormParams ln_node_mlp;
  LayerNormParams ln_edge_mlp;
  MlpParams node_mlp;  // d -> ratio*d -> d
  MlpParams edge_mlp;

  static QuadLayerParams init(int d, int heads, int mlp_ratio, Rng& rng, bool bias);
};

struct LayerState {
  Tensor nodes;  // [n x d]
  Tensor edges;  // [|E| x d]; rows outside the selected set stay untouched
};

// One round of selective quad attention:
//   1. node self-attention + residual + norm        -> G
//   2. selected-edge self-attention + residual      -> H_q
//   3. key/value pools gathered from the edge stack where selected rows are
//      the refreshed H_q and unselected rows keep their incoming features
//   4. node stream adds n2n and n2e terms, edge stream adds e2n and e2e
//   5. per-stream feed-forward + residual + norm
// Unselected edge rows are copied through bit-for-bit. An empty omega_q
// skips the whole edge stream; empty pools skip just their attention term.
LayerState quad_layer(Tape& tape, const LayerState& prev, const QuadLayerParams& params,
                      const std::vector<int>& omega_q, const std::vector<int>& omega_n2e,
                      const std::vector<int>& omega_e2e, const AttentionMask& mask,
                      double ln_eps = 1e-5);

}  // namespace squat
