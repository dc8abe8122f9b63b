#include "squat/attention.hpp"

#include <cmath>

namespace squat {

MhaParams MhaParams::init(int d, int heads, Rng& rng, bool bias) {
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("MhaParams: head count " + std::to_string(heads) + " must divide d=" + std::to_string(d));
  }
  const int d_k = d / heads;
  MhaParams p;
  p.wq.reserve(static_cast<std::size_t>(heads));
  p.wk.reserve(static_cast<std::size_t>(heads));
  p.wv.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Rng rq = rng.split("wq" + std::to_string(h));
    Rng rk = rng.split("wk" + std::to_string(h));
    Rng rv = rng.split("wv" + std::to_string(h));
    p.wq.push_back(Linear::init(d, d_k, rq, bias));
    p.wk.push_back(Linear::init(d, d_k, rk, bias));
    p.wv.push_back(Linear::init(d, d_k, rv, bias));
  }
  Rng ro = rng.split("wo");
  p.wo = Linear::init(heads * d_k, d, ro, bias);
  return p;
}

Tensor mha(Tape& tape, const Tensor& query, const Tensor& keys, const Tensor& values,
           const MhaParams& params) {
  if (!keys.defined() || keys.rows() < 1) {
    throw ContractError("mha: empty key set; callers must skip the attention term instead");
  }
  if (keys.rows() != values.rows()) {
    throw DimensionError("mha: keys " + keys.shape_str() + " vs values " + values.shape_str());
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.key_dim()));
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(params.wq.size());
  for (std::size_t h = 0; h < params.wq.size(); ++h) {
    Tensor q = params.wq[h].apply(tape, query);
    Tensor k = params.wk[h].apply(tape, keys);
    Tensor v = params.wv[h].apply(tape, values);
    Tensor scores = scale(tape, matmul(tape, q, transpose(tape, k)), inv_sqrt_dk);
    Tensor weights = softmax_rows(tape, scores);
    head_outputs.push_back(matmul(tape, weights, v));
  }
  return params.wo.apply(tape, concat_cols(tape, head_outputs));
}

QuadLayerParams QuadLayerParams::init(int d, int heads, int mlp_ratio, Rng& rng, bool bias) {
  QuadLayerParams p;
  Rng r_ns = rng.split("node_self");
  Rng r_es = rng.split("edge_self");
  Rng r_n2n = rng.split("n2n");
  Rng r_n2e = rng.split("n2e");
  Rng r_e2n = rng.split("e2n");
  Rng r_e2e = rng.split("e2e");
  p.node_self = MhaParams::init(d, heads, r_ns, bias);
  p.edge_self = MhaParams::init(d, heads, r_es, bias);
  p.n2n = MhaParams::init(d, heads, r_n2n, bias);
  p.n2e = MhaParams::init(d, heads, r_n2e, bias);
  p.e2n = MhaParams::init(d, heads, r_e2n, bias);
  p.e2e = MhaParams::init(d, heads, r_e2e, bias);
  p.ln_node_self = LayerNormParams::init(d);
  p.ln_edge_self = LayerNormParams::init(d);
  p.ln_node_cross = LayerNormParams::init(d);
  p.ln_edge_cross = LayerNormParams::init(d);
  p.ln_node_mlp = LayerNormParams::init(d);
  p.ln_edge_mlp = LayerNormParams::init(d);
  Rng r_nm = rng.split("node_mlp");
  Rng r_em = rng.split("edge_mlp");
  p.node_mlp = MlpParams::init(d, mlp_ratio * d, d, r_nm, bias);
  p.edge_mlp = MlpParams::init(d, mlp_ratio * d, d, r_em, bias);
  return p;
}

LayerState quad_layer(Tape& tape, const LayerState& prev, const QuadLayerParams& params,
                      const std::vector<int>& omega_q, const std::vector<int>& omega_n2e,
                      const std::vector<int>& omega_e2e, const AttentionMask& mask,
                      double ln_eps) {
  if (!prev.nodes.defined() || prev.nodes.rows() < 1) {
    throw ContractError("quad_layer: node stream must hold at least one row");
  }
  Tensor g = params.ln_node_self.apply(
      tape, add(tape, prev.nodes, mha(tape, prev.nodes, prev.nodes, prev.nodes, params.node_self)), ln_eps);

  const bool update_edges = !omega_q.empty();
  Tensor h_q;        // refreshed selected-edge rows
  Tensor edge_stack; // selected rows refreshed, the rest carrying incoming features
  if (update_edges) {
    Tensor e_q = gather_rows(tape, prev.edges, omega_q);
    h_q = params.ln_edge_self.apply(tape, add(tape, e_q, mha(tape, e_q, e_q, e_q, params.edge_self)), ln_eps);
    edge_stack = scatter_rows(tape, prev.edges, omega_q, h_q);
  } else {
    edge_stack = prev.edges;
  }

  Tensor node_acc = g;
  if (mask.n2n) node_acc = add(tape, node_acc, mha(tape, g, g, g, params.n2n));
  if (mask.n2e && !omega_n2e.empty() && edge_stack.defined()) {
    Tensor pool = gather_rows(tape, edge_stack, omega_n2e);
    node_acc = add(tape, node_acc, mha(tape, g, pool, pool, params.n2e));
  }
  Tensor g_prime = params.ln_node_cross.apply(tape, node_acc, ln_eps);
  LayerState next;
  next.nodes = params.ln_node_mlp.apply(
      tape, add(tape, g_prime, params.node_mlp.apply(tape, g_prime)), ln_eps);

  if (update_edges) {
    Tensor edge_acc = h_q;
    if (mask.e2n) edge_acc = add(tape, edge_acc, mha(tape, h_q, g, g, params.e2n));
    if (mask.e2e && !omega_e2e.empty()) {
      Tensor pool = gather_rows(tape, edge_stack, omega_e2e);
      edge_acc = add(tape, edge_acc, mha(tape, h_q, pool, pool, params.e2e));
    }
    Tensor h_prime = params.ln_edge_cross.apply(tape, edge_acc, ln_eps);
    Tensor refreshed = params.ln_edge_mlp.apply(
        tape, add(tape, h_prime, params.edge_mlp.apply(tape, h_prime)), ln_eps);
    next.edges = scatter_rows(tape, prev.edges, omega_q, refreshed);
  } else {
    next.edges = prev.edges;
  }
  return next;
}

}  // namespace squat
