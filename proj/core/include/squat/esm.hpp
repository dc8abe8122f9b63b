#pragma once

#include "squat/nn.hpp"

namespace squat {

// Edge scoring head. Four affine layers; the first is split into a local and
// a global half, the global halves are mean-pooled over all edges and fused
// back into every edge before the remaining stack produces one logit per
// edge. Layer norm + GeLU follow each of the first three layers; the scalar
// output stays raw. Selection ranks raw logits; the training loss consumes
// them through a sigmoid.
struct EsmParams {
  Linear l1;           // d -> 2m (m local + m global)
  LayerNormParams ln1;
  Linear l2;           // 2m -> m
  LayerNormParams ln2;
  Linear l3;           // m -> m
  LayerNormParams ln3;
  Linear l4;           // m -> 1

  static EsmParams init(int d, int m, Rng& rng, bool bias);
  int hidden_dim() const { return l2.out_dim(); }
};

// edges [|E| x d] -> logits [|E| x 1].
Tensor esm_score(Tape& tape, const Tensor& edges, const EsmParams& params, double ln_eps = 1e-5);

struct SelectionResult {
  std::vector<int> indices;  // ascending positions into the edge list
  int count = 0;
  double rho = 0.0;
};

// Keeps the top max(1, floor(rho * |E|)) edges by descending score, ties
// broken toward the earlier canonical position; rho in (0, 1].
SelectionResult select_top_rho(const std::vector<double>& scores, double rho);

enum class EsmMode { kShared, kDistinct };

// One scoring head per attention consumer: query-edge set, node-to-edge
// key/value pool, edge-to-edge key/value pool.
struct EsmBank {
  EsmParams q;
  EsmParams n2e;
  EsmParams e2e;

  static EsmBank init(int d, int m, Rng& rng, bool bias);
};

struct EsmScores {
  Tensor q;    // [|E| x 1]
  Tensor n2e;  // shares q's storage in shared mode
  Tensor e2e;
};

struct Selections {
  SelectionResult q;
  SelectionResult n2e;
  SelectionResult e2e;
};

struct EsmOutputs {
  EsmScores scores;
  Selections selections;
};

// Scores all three heads (a single pass reused three ways in shared mode)
// and selects with a common keep ratio.
EsmOutputs run_all_esms(Tape& tape, const Tensor& edges, const EsmBank& bank, double rho,
                        EsmMode mode, double ln_eps = 1e-5);

}  // namespace squat
