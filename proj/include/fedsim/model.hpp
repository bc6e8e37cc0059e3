#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>

#include "fedsim/linalg.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

struct ModelDims {
  Index input = 0;
  Index hidden = 0;
  Index classes = 0;
};

// Two-part network w = {u, v}: extractor u = {w1, b1}, classifier v = {w2, b2}.
struct ModelParams {
  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Matrix w2;  // classes x hidden
  Vector b2;  // classes

  Index input_dim() const { return w1.cols(); }
  Index hidden_dim() const { return w1.rows(); }
  Index class_count() const { return w2.rows(); }
};

// Same shapes as the ModelParams it differentiates.
struct GradientSet {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

// Applies f to the four weight arrays of any param-like block, in
// serialization order.
template <typename Block, typename F>
void for_each_array(Block& block, F&& f) {
  f(block.w1);
  f(block.b1);
  f(block.w2);
  f(block.b2);
}

GradientSet zero_gradients(const ModelParams& params);

bool same_shape(const ModelParams& a, const ModelParams& b);
bool same_shape(const ModelParams& p, const GradientSet& g);
void require_consistent(const ModelParams& params);

// z = relu(w1 x + b1), logits = w2 z + b2.
std::pair<Vector, Vector> forward(const ModelParams& params, const Vector& x);

// Row-per-sample batch versions: x is B x input, returns (B x hidden, B x classes).
std::pair<Matrix, Matrix> forward_batch(const ModelParams& params, const Matrix& x);
Matrix logits_batch(const ModelParams& params, const Matrix& x);

// One gradient-descent step; rejects non-finite gradients before mutating
// anything.
ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, double eta);

// Symmetric-uniform fan init: weights in [-s, s] with s = sqrt(6/(fan_in+fan_out)),
// biases zero. Fully determined by the stream.
ModelParams init_params(const ModelDims& dims, Rng& rng);

// Flat little-endian doubles prefixed by the four shape integers
// (w1 rows, w1 cols, w2 rows, w2 cols) as 64-bit little-endian words.
void save_params(std::ostream& out, const ModelParams& params);
ModelParams load_params(std::istream& in);

}  // namespace fedsim
