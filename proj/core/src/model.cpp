#include "squat/model.hpp"

#include <numeric>

namespace squat {

const char* to_string(EdgeSource s) {
  switch (s) {
    case EdgeSource::kNone: return "none";
    case EdgeSource::kFull: return "full";
    case EdgeSource::kEsm: return "esm";
    case EdgeSource::kOracle: return "oracle";
  }
  return "?";
}

EdgeSource edge_source_from_string(const std::string& s) {
  if (s == "none") return EdgeSource::kNone;
  if (s == "full") return EdgeSource::kFull;
  if (s == "esm") return EdgeSource::kEsm;
  if (s == "oracle") return EdgeSource::kOracle;
  throw ConfigError("unknown edge source '" + s + "' (expected none|full|esm|oracle)");
}

const char* to_string(EsmMode m) { return m == EsmMode::kShared ? "shared" : "distinct"; }

EsmMode esm_mode_from_string(const std::string& s) {
  if (s == "shared") return EsmMode::kShared;
  if (s == "distinct") return EsmMode::kDistinct;
  throw ConfigError("unknown esm mode '" + s + "' (expected shared|distinct)");
}

std::string to_string(const AttentionMask& mask) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(mask.n2n, "N2N");
  add(mask.n2e, "N2E");
  add(mask.e2n, "E2N");
  add(mask.e2e, "E2E");
  return out.empty() ? "none" : out;
}

AttentionMask attention_mask_from_string(const std::string& s) {
  AttentionMask mask;
  mask.n2n = mask.n2e = mask.e2n = mask.e2e = false;
  if (s == "none" || s.empty()) return mask;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string term = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (term == "N2N") {
      mask.n2n = true;
    } else if (term == "N2E") {
      mask.n2e = true;
    } else if (term == "E2N") {
      mask.e2n = true;
    } else if (term == "E2E") {
      mask.e2e = true;
    } else {
      throw ConfigError("unknown attention term '" + term + "' (expected subset of N2N,N2E,E2N,E2E or none)");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return mask;
}

void ModelConfig::validate() const {
  if (d_v < 1 || d_h < 1 || d_g < 1 || d < 1) throw ConfigError("model: feature widths must be positive");
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("model: heads=" + std::to_string(heads) + " must divide d=" + std::to_string(d));
  }
  if (layers < 1) throw ConfigError("model: need at least one quad layer");
  if (mlp_ratio < 1) throw ConfigError("model: mlp_ratio must be positive");
  if (esm_hidden < 0) throw ConfigError("model: esm_hidden must be >= 0");
  if (esm_m() < 1) throw ConfigError("model: selector hidden width must be positive");
  if (num_object_classes < 1) throw ConfigError("model: need at least one object class");
  if (num_predicates < 1) throw ConfigError("model: need at least one predicate");
  if (!(ln_eps > 0.0)) throw ConfigError("model: ln_eps must be positive");
}

ClassifierParams ClassifierParams::init(int d, int outputs, Rng& rng, bool bias) {
  ClassifierParams p;
  Rng r1 = rng.split("fc1");
  Rng r2 = rng.split("fc2");
  p.fc1 = Linear::init(d, d, r1, bias);
  p.fc2 = Linear::init(d, outputs, r2, bias);
  return p;
}

Tensor ClassifierParams::apply(Tape& tape, const Tensor& x) const {
  return fc2.apply(tape, gelu(tape, fc1.apply(tape, x)));
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng root(seed);
  p.feat = ExtractionParams::init(config.d_v, config.d_h, config.d_g, config.d, root, config.bias);
  p.esms = EsmBank::init(config.d, config.esm_m(), root, config.bias);
  p.layers.reserve(static_cast<std::size_t>(config.layers));
  for (int t = 0; t < config.layers; ++t) {
    Rng rl = root.split("layer" + std::to_string(t));
    p.layers.push_back(QuadLayerParams::init(config.d, config.heads, config.mlp_ratio, rl, config.bias));
  }
  Rng rc = root.split("classifier");
  p.classifier = ClassifierParams::init(config.d, config.classifier_outputs(), rc, config.bias);
  return p;
}

namespace {

using Visitor = std::function<void(const std::string&, Tensor)>;

void visit_linear(const std::string& name, const Linear& l, const Visitor& fn) {
  fn(name + ".w", l.w);
  if (l.has_bias) fn(name + ".b", l.b);
}

void visit_ln(const std::string& name, const LayerNormParams& ln, const Visitor& fn) {
  fn(name + ".gain", ln.gain);
  fn(name + ".bias", ln.bias);
}

void visit_mlp(const std::string& name, const MlpParams& m, const Visitor& fn) {
  visit_linear(name + ".fc1", m.fc1, fn);
  visit_linear(name + ".fc2", m.fc2, fn);
}

void visit_esm(const std::string& name, const EsmParams& e, const Visitor& fn) {
  visit_linear(name + ".l1", e.l1, fn);
  visit_ln(name + ".ln1", e.ln1, fn);
  visit_linear(name + ".l2", e.l2, fn);
  visit_ln(name + ".ln2", e.ln2, fn);
  visit_linear(name + ".l3", e.l3, fn);
  visit_ln(name + ".ln3", e.ln3, fn);
  visit_linear(name + ".l4", e.l4, fn);
}

void visit_mha(const std::string& name, const MhaParams& m, const Visitor& fn) {
  for (std::size_t h = 0; h < m.wq.size(); ++h) {
    visit_linear(name + ".wq" + std::to_string(h), m.wq[h], fn);
    visit_linear(name + ".wk" + std::to_string(h), m.wk[h], fn);
    visit_linear(name + ".wv" + std::to_string(h), m.wv[h], fn);
  }
  visit_linear(name + ".wo", m.wo, fn);
}

}  // namespace

void visit_params(const ModelParams& params, const Visitor& fn) {
  visit_linear("feat.wv", params.feat.wv, fn);
  visit_linear("feat.wg", params.feat.wg, fn);
  visit_linear("feat.wo", params.feat.wo, fn);
  visit_linear("feat.wp", params.feat.wp, fn);
  visit_esm("esm_q", params.esms.q, fn);
  visit_esm("esm_n2e", params.esms.n2e, fn);
  visit_esm("esm_e2e", params.esms.e2e, fn);
  for (std::size_t t = 0; t < params.layers.size(); ++t) {
    const std::string base = "layer" + std::to_string(t);
    const QuadLayerParams& lp = params.layers[t];
    visit_mha(base + ".node_self", lp.node_self, fn);
    visit_mha(base + ".edge_self", lp.edge_self, fn);
    visit_mha(base + ".n2n", lp.n2n, fn);
    visit_mha(base + ".n2e", lp.n2e, fn);
    visit_mha(base + ".e2n", lp.e2n, fn);
    visit_mha(base + ".e2e", lp.e2e, fn);
    visit_ln(base + ".ln_node_self", lp.ln_node_self, fn);
    visit_ln(base + ".ln_edge_self", lp.ln_edge_self, fn);
    visit_ln(base + ".ln_node_cross", lp.ln_node_cross, fn);
    visit_ln(base + ".ln_edge_cross", lp.ln_edge_cross, fn);
    visit_ln(base + ".ln_node_mlp", lp.ln_node_mlp, fn);
    visit_ln(base + ".ln_edge_mlp", lp.ln_edge_mlp, fn);
    visit_mlp(base + ".node_mlp", lp.node_mlp, fn);
    visit_mlp(base + ".edge_mlp", lp.edge_mlp, fn);
  }
  visit_linear("classifier.fc1", params.classifier.fc1, fn);
  visit_linear("classifier.fc2", params.classifier.fc2, fn);
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t count = 0;
  visit_params(params, [&count](const std::string&, Tensor t) { count += t.numel(); });
  return count;
}

void zero_all_grads(const ModelParams& params) {
  visit_params(params, [](const std::string&, Tensor t) { t.zero_grad(); });
}

ForwardResult forward_quad(Tape& tape, const FeatureBundle& bundle, const Selections& selections,
                           const ModelParams& params) {
  LayerState state{bundle.nodes, bundle.edges};
  for (const QuadLayerParams& layer : params.layers) {
    state = quad_layer(tape, state, layer, selections.q.indices, selections.n2e.indices,
                       selections.e2e.indices, params.config.mask, params.config.ln_eps);
  }
  ForwardResult result;
  result.state = state;
  // With no refreshed edge rows anywhere (edge source "none"), the layers were
  // node-only; relation features are re-projected from the contextualized
  // nodes instead of classifying the untouched initial pair rows.
  const Tensor classifier_in = selections.q.indices.empty()
                                   ? edge_features(tape, state.nodes, params.feat).edges
                                   : state.edges;
  result.logits = params.classifier.apply(tape, classifier_in);
  result.probs = softmax_rows(tape, result.logits);
  return result;
}

PipelineResult run_pipeline(Tape& tape, const std::vector<Detection>& detections,
                            const ModelParams& params, double rho, EdgeSource source,
                            const std::vector<int>& oracle_edges, bool score_esms) {
  PipelineResult r;
  r.bundle = build_features(tape, detections, params.feat);
  const int e = r.bundle.edges.rows();

  const bool need_scores = score_esms || source == EdgeSource::kEsm;
  if (need_scores) {
    EsmOutputs esm = run_all_esms(tape, r.bundle.edges, params.esms, rho, params.config.esm_mode,
                                  params.config.ln_eps);
    r.scores = esm.scores;
    if (source == EdgeSource::kEsm) r.selections = esm.selections;
  }
  switch (source) {
    case EdgeSource::kEsm:
      break;
    case EdgeSource::kFull: {
      std::vector<int> all(static_cast<std::size_t>(e));
      std::iota(all.begin(), all.end(), 0);
      r.selections.q = {all, e, 1.0};
      r.selections.n2e = {all, e, 1.0};
      r.selections.e2e = {all, e, 1.0};
      break;
    }
    case EdgeSource::kNone:
      r.selections = Selections{};
      break;
    case EdgeSource::kOracle: {
      SelectionResult sel{oracle_edges, static_cast<int>(oracle_edges.size()), 1.0};
      r.selections.q = sel;
      r.selections.n2e = sel;
      r.selections.e2e = sel;
      break;
    }
  }
  r.out = forward_quad(tape, r.bundle, r.selections, params);
  return r;
}

}  // namespace squat
