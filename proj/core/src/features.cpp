#include "squat/features.hpp"

namespace squat {

ExtractionParams ExtractionParams::init(int d_v, int d_h, int d_g, int d, Rng& rng, bool bias) {
  ExtractionParams p;
  Rng r1 = rng.split("feat.wv");
  Rng r2 = rng.split("feat.wg");
  Rng r3 = rng.split("feat.wo");
  Rng r4 = rng.split("feat.wp");
  p.wv = Linear::init(d_v, d_h, r1, bias);
  p.wg = Linear::init(4, d_g, r2, bias);
  p.wo = Linear::init(d_h + d_g, d, r3, bias);
  p.wp = Linear::init(2 * d, d, r4, bias);
  return p;
}

Tensor node_features(Tape& tape, const std::vector<Detection>& detections, const ExtractionParams& params) {
  const int n = static_cast<int>(detections.size());
  if (n < 1) throw DimensionError("node_features: need at least one detection");
  const int d_v = params.wv.in_dim();
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (static_cast<int>(detections[i].visual.size()) != d_v) {
      throw DimensionError("node_features: detection " + std::to_string(i) + " has feature width " +
                           std::to_string(detections[i].visual.size()) + ", params expect " + std::to_string(d_v));
    }
  }
  Tensor visual = Tensor::zeros(n, d_v);
  Tensor geometry = Tensor::zeros(n, 4);
  for (int i = 0; i < n; ++i) {
    const Detection& det = detections[static_cast<std::size_t>(i)];
    for (int j = 0; j < d_v; ++j) visual.at(i, j) = det.visual[static_cast<std::size_t>(j)];
    geometry.at(i, 0) = det.box.x1;
    geometry.at(i, 1) = det.box.y1;
    geometry.at(i, 2) = det.box.x2;
    geometry.at(i, 3) = det.box.y2;
  }
  Tensor appearance = params.wv.apply(tape, visual);
  Tensor layout = params.wg.apply(tape, geometry);
  return params.wo.apply(tape, concat_cols(tape, {appearance, layout}));
}

FeatureBundle edge_features(Tape& tape, const Tensor& nodes, const ExtractionParams& params) {
  const int n = nodes.rows();
  if (n < 2) throw DimensionError("edge_features: need at least two objects, got " + std::to_string(n));
  FeatureBundle bundle;
  bundle.nodes = nodes;
  bundle.pairs = edge_list(n);
  std::vector<int> subj(bundle.pairs.size()), obj(bundle.pairs.size());
  for (std::size_t k = 0; k < bundle.pairs.size(); ++k) {
    subj[k] = bundle.pairs[k].subject;
    obj[k] = bundle.pairs[k].object;
  }
  Tensor subj_rows = gather_rows(tape, nodes, subj);
  Tensor obj_rows = gather_rows(tape, nodes, obj);
  bundle.edges = params.wp.apply(tape, concat_cols(tape, {subj_rows, obj_rows}));
  return bundle;
}

FeatureBundle build_features(Tape& tape, const std::vector<Detection>& detections,
                             const ExtractionParams& params) {
  return edge_features(tape, node_features(tape, detections, params), params);
}

}  // namespace squat
