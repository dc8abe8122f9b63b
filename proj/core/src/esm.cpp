#include "squat/esm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace squat {

EsmParams EsmParams::init(int d, int m, Rng& rng, bool bias) {
  EsmParams p;
  Rng r1 = rng.split("l1");
  Rng r2 = rng.split("l2");
  Rng r3 = rng.split("l3");
  Rng r4 = rng.split("l4");
  p.l1 = Linear::init(d, 2 * m, r1, bias);
  p.ln1 = LayerNormParams::init(2 * m);
  p.l2 = Linear::init(2 * m, m, r2, bias);
  p.ln2 = LayerNormParams::init(m);
  p.l3 = Linear::init(m, m, r3, bias);
  p.ln3 = LayerNormParams::init(m);
  p.l4 = Linear::init(m, 1, r4, bias);
  return p;
}

Tensor esm_score(Tape& tape, const Tensor& edges, const EsmParams& params, double ln_eps) {
  if (edges.cols() != params.l1.in_dim()) {
    throw DimensionError("esm_score: edges " + edges.shape_str() + " vs params expecting d=" +
                         std::to_string(params.l1.in_dim()));
  }
  const int m = params.hidden_dim();
  Tensor h = gelu(tape, params.ln1.apply(tape, params.l1.apply(tape, edges), ln_eps));
  Tensor local = slice_cols(tape, h, 0, m);
  Tensor global_half = slice_cols(tape, h, m, m);
  Tensor pooled = mean_rows(tape, global_half);
  Tensor fused = concat_cols(tape, {local, tile_rows(tape, pooled, edges.rows())});
  Tensor z = gelu(tape, params.ln2.apply(tape, params.l2.apply(tape, fused), ln_eps));
  z = gelu(tape, params.ln3.apply(tape, params.l3.apply(tape, z), ln_eps));
  return params.l4.apply(tape, z);
}

SelectionResult select_top_rho(const std::vector<double>& scores, double rho) {
  if (scores.empty()) throw ContractError("select_top_rho: empty score list");
  if (!(rho > 0.0) || rho > 1.0) {
    throw ConfigError("select_top_rho: keep ratio must lie in (0, 1], got " + std::to_string(rho));
  }
  const int e = static_cast<int>(scores.size());
  // The small epsilon keeps decimal ratios exact: 0.7 * 90 must floor to 63,
  // not to 62 via the binary representation of 0.7.
  int count = static_cast<int>(std::floor(rho * e + 1e-9));
  count = std::clamp(count, 1, e);

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  SelectionResult result;
  result.rho = rho;
  result.count = count;
  result.indices.assign(order.begin(), order.begin() + count);
  std::sort(result.indices.begin(), result.indices.end());
  return result;
}

EsmBank EsmBank::init(int d, int m, Rng& rng, bool bias) {
  EsmBank bank;
  Rng rq = rng.split("esm_q");
  Rng rn = rng.split("esm_n2e");
  Rng re = rng.split("esm_e2e");
  bank.q = EsmParams::init(d, m, rq, bias);
  bank.n2e = EsmParams::init(d, m, rn, bias);
  bank.e2e = EsmParams::init(d, m, re, bias);
  return bank;
}

EsmOutputs run_all_esms(Tape& tape, const Tensor& edges, const EsmBank& bank, double rho,
                        EsmMode mode, double ln_eps) {
  EsmOutputs out;
  out.scores.q = esm_score(tape, edges, bank.q, ln_eps);
  if (mode == EsmMode::kShared) {
    out.scores.n2e = out.scores.q;
    out.scores.e2e = out.scores.q;
  } else {
    out.scores.n2e = esm_score(tape, edges, bank.n2e, ln_eps);
    out.scores.e2e = esm_score(tape, edges, bank.e2e, ln_eps);
  }
  out.selections.q = select_top_rho(out.scores.q.values(), rho);
  out.selections.n2e = select_top_rho(out.scores.n2e.values(), rho);
  out.selections.e2e = select_top_rho(out.scores.e2e.values(), rho);
  return out;
}

}  // namespace squat
