#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "squat/attention.hpp"

using namespace squat;

namespace {

Tensor filled(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Straight-line reference: per head, scores = (x Wq)(y Wk)^T / sqrt(d_k),
// softmax over keys, convex combination of value rows, heads concatenated,
// shared output map. Plain loops, no library calls.
std::vector<std::vector<double>> reference_mha(const Tensor& query, const Tensor& keys,
                                               const Tensor& values, const MhaParams& p) {
  const int a = query.rows();
  const int b = keys.rows();
  const int h = p.heads();
  const int dk = p.key_dim();
  const int d = p.wo.out_dim();

  auto affine = [](const Tensor& x, const Linear& lin, int row, int out_col) {
    double acc = lin.has_bias ? lin.b.at(0, out_col) : 0.0;
    for (int k = 0; k < lin.in_dim(); ++k) acc += x.at(row, k) * lin.w.at(k, out_col);
    return acc;
  };

  std::vector<std::vector<double>> concat(static_cast<std::size_t>(a),
                                          std::vector<double>(static_cast<std::size_t>(h * dk)));
  for (int head = 0; head < h; ++head) {
    for (int i = 0; i < a; ++i) {
      std::vector<double> scores(static_cast<std::size_t>(b));
      double max_score = -1e300;
      for (int j = 0; j < b; ++j) {
        double dot = 0.0;
        for (int k = 0; k < dk; ++k) {
          dot += affine(query, p.wq[static_cast<std::size_t>(head)], i, k) *
                 affine(keys, p.wk[static_cast<std::size_t>(head)], j, k);
        }
        scores[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dk));
        max_score = std::max(max_score, scores[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (double& s : scores) {
        s = std::exp(s - max_score);
        z += s;
      }
      for (int k = 0; k < dk; ++k) {
        double acc = 0.0;
        for (int j = 0; j < b; ++j) {
          acc += scores[static_cast<std::size_t>(j)] / z *
                 affine(values, p.wv[static_cast<std::size_t>(head)], j, k);
        }
        concat[static_cast<std::size_t>(i)][static_cast<std::size_t>(head * dk + k)] = acc;
      }
    }
  }

  std::vector<std::vector<double>> out(static_cast<std::size_t>(a),
                                       std::vector<double>(static_cast<std::size_t>(d)));
  for (int i = 0; i < a; ++i) {
    for (int c = 0; c < d; ++c) {
      double acc = p.wo.has_bias ? p.wo.b.at(0, c) : 0.0;
      for (int k = 0; k < h * dk; ++k) {
        acc += concat[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * p.wo.w.at(k, c);
      }
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = acc;
    }
  }
  return out;
}

bool rows_bitwise_equal(const Tensor& a, const Tensor& b, int row) {
  REQUIRE(a.cols() == b.cols());
  return std::memcmp(a.data() + static_cast<std::size_t>(row) * a.cols(),
                     b.data() + static_cast<std::size_t>(row) * b.cols(),
                     sizeof(double) * static_cast<std::size_t>(a.cols())) == 0;
}

}  // namespace

TEST_CASE("multi-head attention matches a loop-level reference") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(600 + seed);
    const int d = 12;
    const int heads = 3;
    MhaParams p = MhaParams::init(d, heads, rng, true);
    CHECK(p.heads() == heads);
    CHECK(p.key_dim() == d / heads);

    Tensor q = filled(4, d, 70 + seed);
    Tensor k = filled(6, d, 80 + seed);
    Tensor v = filled(6, d, 90 + seed);

    Tape tape;
    Tensor got = mha(tape, q, k, v, p);
    const auto want = reference_mha(q, k, v, p);
    CHECK(got.rows() == 4);
    CHECK(got.cols() == d);
    for (int i = 0; i < 4; ++i) {
      for (int c = 0; c < d; ++c) {
        CAPTURE(seed);
        CHECK(got.at(i, c) ==
              doctest::Approx(want[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)])
                  .epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("attention output is invariant to key/value co-permutation") {
  Rng rng(41);
  MhaParams p = MhaParams::init(8, 2, rng, true);
  Tensor q = filled(3, 8, 1);
  Tensor k = filled(5, 8, 2);
  Tensor v = filled(5, 8, 3);

  const std::vector<int> perm = {4, 2, 0, 3, 1};
  Tensor kp = Tensor::zeros(5, 8);
  Tensor vp = Tensor::zeros(5, 8);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 8; ++c) {
      kp.at(r, c) = k.at(perm[static_cast<std::size_t>(r)], c);
      vp.at(r, c) = v.at(perm[static_cast<std::size_t>(r)], c);
    }
  }

  Tape tape;
  Tensor base = mha(tape, q, k, v, p);
  Tensor moved = mha(tape, q, kp, vp, p);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 8; ++c) {
      CHECK(moved.at(r, c) == doctest::Approx(base.at(r, c)).epsilon(1e-11));
    }
  }
}

TEST_CASE("quad layer copies unselected edge rows through bit-for-bit") {
  Rng rng(52);
  const int d = 16;
  QuadLayerParams layer = QuadLayerParams::init(d, 2, 2, rng, true);
  AttentionMask mask;  // all four flows on

  LayerState prev;
  prev.nodes = filled(5, d, 10);
  prev.edges = filled(20, d, 11);

  const std::vector<int> omega_q = {1, 4, 7, 13};
  const std::vector<int> omega_n2e = {0, 4, 9};
  const std::vector<int> omega_e2e = {1, 7, 19};

  Tape tape;
  LayerState next = quad_layer(tape, prev, layer, omega_q, omega_n2e, omega_e2e, mask);
  CHECK(next.edges.rows() == 20);

  std::size_t untouched = 0;
  for (int row = 0; row < 20; ++row) {
    const bool selected = std::find(omega_q.begin(), omega_q.end(), row) != omega_q.end();
    if (selected) {
      CHECK_FALSE(rows_bitwise_equal(next.edges, prev.edges, row));
    } else {
      CHECK(rows_bitwise_equal(next.edges, prev.edges, row));
      ++untouched;
    }
  }
  CHECK(untouched == 16);

  // stacking layers preserves the invariant for rows never selected anywhere
  LayerState third = quad_layer(tape, next, layer, {2, 7}, omega_n2e, omega_e2e, mask);
  for (int row : {0, 3, 5, 6, 8}) {
    CHECK(rows_bitwise_equal(third.edges, prev.edges, row));
  }
}

TEST_CASE("empty selections: no edge stream, node stream still runs") {
  Rng rng(61);
  const int d = 12;
  QuadLayerParams layer = QuadLayerParams::init(d, 2, 2, rng, true);
  AttentionMask mask;

  LayerState prev;
  prev.nodes = filled(4, d, 20);
  prev.edges = filled(12, d, 21);

  Tape tape;
  LayerState next = quad_layer(tape, prev, layer, {}, {}, {}, mask);
  for (int row = 0; row < 12; ++row) CHECK(rows_bitwise_equal(next.edges, prev.edges, row));
  bool nodes_moved = false;
  for (int r = 0; r < 4 && !nodes_moved; ++r) {
    nodes_moved = !rows_bitwise_equal(next.nodes, prev.nodes, r);
  }
  CHECK(nodes_moved);

  // empty pools drop just their terms; selected rows still refresh
  LayerState partial = quad_layer(tape, prev, layer, {0, 5}, {}, {}, mask);
  CHECK_FALSE(rows_bitwise_equal(partial.edges, prev.edges, 0));
  CHECK(rows_bitwise_equal(partial.edges, prev.edges, 1));
}

TEST_CASE("mask flags gate their attention terms") {
  Rng rng(73);
  const int d = 12;
  QuadLayerParams layer = QuadLayerParams::init(d, 2, 2, rng, true);

  LayerState prev;
  prev.nodes = filled(4, d, 30);
  prev.edges = filled(12, d, 31);
  const std::vector<int> omega = {0, 3, 6, 9};

  Tape tape;
  AttentionMask all;
  LayerState with_all = quad_layer(tape, prev, layer, omega, omega, omega, all);

  AttentionMask no_e2e = all;
  no_e2e.e2e = false;
  LayerState without = quad_layer(tape, prev, layer, omega, omega, omega, no_e2e);
  // dropping e2e changes refreshed edge rows but leaves the node stream alone
  CHECK_FALSE(rows_bitwise_equal(with_all.edges, without.edges, 0));
  for (int r = 0; r < 4; ++r) CHECK(rows_bitwise_equal(with_all.nodes, without.nodes, r));

  AttentionMask no_n2e = all;
  no_n2e.n2e = false;
  LayerState node_side = quad_layer(tape, prev, layer, omega, omega, omega, no_n2e);
  bool node_changed = false;
  for (int r = 0; r < 4 && !node_changed; ++r) {
    node_changed = !rows_bitwise_equal(with_all.nodes, node_side.nodes, r);
  }
  CHECK(node_changed);

  AttentionMask none{false, false, false, false};
  LayerState bare = quad_layer(tape, prev, layer, omega, omega, omega, none);
  // self-attention plus feed-forward still update both streams
  CHECK_FALSE(rows_bitwise_equal(bare.nodes, prev.nodes, 0));
  CHECK_FALSE(rows_bitwise_equal(bare.edges, prev.edges, 0));
  CHECK(rows_bitwise_equal(bare.edges, prev.edges, 1));  // unselected row
}
