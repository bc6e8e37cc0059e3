#include "fedsim/model.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace fedsim {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

GradientSet zero_gradients(const ModelParams& params) {
  GradientSet g;
  g.w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
  g.b1 = Vector::Zero(params.b1.size());
  g.w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
  g.b2 = Vector::Zero(params.b2.size());
  return g;
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  return a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() &&
         a.b1.size() == b.b1.size() && a.w2.rows() == b.w2.rows() &&
         a.w2.cols() == b.w2.cols() && a.b2.size() == b.b2.size();
}

bool same_shape(const ModelParams& p, const GradientSet& g) {
  return p.w1.rows() == g.w1.rows() && p.w1.cols() == g.w1.cols() &&
         p.b1.size() == g.b1.size() && p.w2.rows() == g.w2.rows() &&
         p.w2.cols() == g.w2.cols() && p.b2.size() == g.b2.size();
}

void require_consistent(const ModelParams& params) {
  require(params.w1.rows() == params.b1.size(), "model: b1 length != w1 rows");
  require(params.w2.cols() == params.w1.rows(), "model: w2 cols != w1 rows");
  require(params.w2.rows() == params.b2.size(), "model: b2 length != w2 rows");
}

std::pair<Vector, Vector> forward(const ModelParams& params, const Vector& x) {
  require(x.size() == params.input_dim(), "forward: input length mismatch");
  Vector z = ((params.w1 * x + params.b1).array().max(0.0)).matrix();
  Vector logits = params.w2 * z + params.b2;
  return {std::move(z), std::move(logits)};
}

std::pair<Matrix, Matrix> forward_batch(const ModelParams& params, const Matrix& x) {
  require(x.cols() == params.input_dim(), "forward_batch: input width mismatch");
  Matrix z = ((x * params.w1.transpose()).rowwise() + params.b1.transpose())
                 .array()
                 .max(0.0)
                 .matrix();
  Matrix logits = (z * params.w2.transpose()).rowwise() + params.b2.transpose();
  return {std::move(z), std::move(logits)};
}

Matrix logits_batch(const ModelParams& params, const Matrix& x) {
  return forward_batch(params, x).second;
}

ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, double eta) {
  require(same_shape(params, grads), "sgd_step: gradient shape mismatch");
  require(eta >= 0.0, "sgd_step: eta must be >= 0");
  require(grads.w1.allFinite() && grads.b1.allFinite() &&
              grads.w2.allFinite() && grads.b2.allFinite(),
          "sgd_step: non-finite gradient");
  ModelParams next;
  next.w1 = params.w1 - eta * grads.w1;
  next.b1 = params.b1 - eta * grads.b1;
  next.w2 = params.w2 - eta * grads.w2;
  next.b2 = params.b2 - eta * grads.b2;
  return next;
}

static Matrix uniform_fan_matrix(Index rows, Index cols, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  return m;
}

ModelParams init_params(const ModelDims& dims, Rng& rng) {
  require(dims.input > 0 && dims.hidden > 0 && dims.classes > 0,
          "init_params: dimensions must be positive");
  ModelParams p;
  p.w1 = uniform_fan_matrix(dims.hidden, dims.input, rng);
  p.b1 = Vector::Zero(dims.hidden);
  p.w2 = uniform_fan_matrix(dims.classes, dims.hidden, rng);
  p.b2 = Vector::Zero(dims.classes);
  return p;
}

static void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

static std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("checkpoint: truncated header");
  return v;
}

void save_params(std::ostream& out, const ModelParams& params) {
  require_consistent(params);
  write_u64(out, static_cast<std::uint64_t>(params.w1.rows()));
  write_u64(out, static_cast<std::uint64_t>(params.w1.cols()));
  write_u64(out, static_cast<std::uint64_t>(params.w2.rows()));
  write_u64(out, static_cast<std::uint64_t>(params.w2.cols()));
  for_each_array(params, [&](const auto& arr) {
    out.write(reinterpret_cast<const char*>(arr.data()),
              static_cast<std::streamsize>(sizeof(double) * arr.size()));
  });
}

ModelParams load_params(std::istream& in) {
  const auto hidden = static_cast<Index>(read_u64(in));
  const auto input = static_cast<Index>(read_u64(in));
  const auto classes = static_cast<Index>(read_u64(in));
  const auto hidden2 = static_cast<Index>(read_u64(in));
  if (hidden != hidden2 || hidden <= 0 || input <= 0 || classes <= 0) {
    throw ConfigError("checkpoint: inconsistent shape header");
  }
  ModelParams p;
  p.w1.resize(hidden, input);
  p.b1.resize(hidden);
  p.w2.resize(classes, hidden);
  p.b2.resize(classes);
  for_each_array(p, [&](auto& arr) {
    in.read(reinterpret_cast<char*>(arr.data()),
            static_cast<std::streamsize>(sizeof(double) * arr.size()));
  });
  if (!in) throw ConfigError("checkpoint: truncated payload");
  return p;
}

}  // namespace fedsim
