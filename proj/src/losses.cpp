#include "fedsim/losses.hpp"

#include <cmath>
#include <string>

namespace fedsim {

const char* method_name(Method m) {
  switch (m) {
    case Method::FedAvg: return "fedavg";
    case Method::FedProx: return "fedprox";
    case Method::FedSkc: return "fedskc";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "fedavg") return Method::FedAvg;
  if (name == "fedprox") return Method::FedProx;
  if (name == "fedskc") return Method::FedSkc;
  throw ConfigError("unknown method '" + name + "' (fedavg|fedprox|fedskc)");
}

ClassNormalizers compute_normalizers(const Matrix& logits, const Matrix& sk_vectors,
                                     double u_floor) {
  require(logits.rows() > 0, "compute_normalizers: empty dataset");
  require(logits.cols() == sk_vectors.cols(), "compute_normalizers: width mismatch");
  require(u_floor > 0.0, "compute_normalizers: u_floor must be positive");
  ClassNormalizers out;
  out.u.resize(sk_vectors.rows());
  for (Index j = 0; j < sk_vectors.rows(); ++j) {
    double mean =
        (logits.rowwise() - sk_vectors.row(j)).rowwise().norm().mean();
    out.u(j) = std::max(u_floor, mean);
  }
  return out;
}

ClassNormalizers compute_normalizers(const ModelParams& params,
                                     const ClientDataset& dataset,
                                     const Matrix& sk_vectors, double u_floor) {
  return compute_normalizers(logits_batch(params, dataset.feature_matrix()),
                             sk_vectors, u_floor);
}

double lcl_similarity(const Vector& logit, const Vector& sk_vector, double u) {
  const double nl = logit.norm();
  const double nc = sk_vector.norm();
  if (nl == 0.0 || nc == 0.0) return 0.0;
  return logit.dot(sk_vector) / (nl * nc * u);
}

namespace {

struct LclTerms {
  Matrix scores;     // s_ij = cos(l_i, c_j) / U_j, 0 where a norm vanishes
  Matrix cosines;    // cos(l_i, c_j), 0 where a norm vanishes
  Matrix valid;      // 1 where both norms are nonzero
  Vector row_norms;  // ||l_i||
  Vector col_norms;  // ||c_j||
};

LclTerms lcl_terms(const Matrix& logits, const Matrix& sk_vectors,
                   const ClassNormalizers& normalizers, LclStats* stats) {
  LclTerms t;
  t.row_norms = logits.rowwise().norm();
  t.col_norms = sk_vectors.rowwise().norm();
  const Index batch = logits.rows();
  const Index classes = sk_vectors.rows();
  Matrix dots = logits * sk_vectors.transpose();
  t.cosines = Matrix::Zero(batch, classes);
  t.scores = Matrix::Zero(batch, classes);
  t.valid = Matrix::Zero(batch, classes);
  for (Index i = 0; i < batch; ++i) {
    for (Index j = 0; j < classes; ++j) {
      if (t.row_norms(i) == 0.0 || t.col_norms(j) == 0.0) {
        if (stats) ++stats->zero_norm_pairs;
        continue;
      }
      t.valid(i, j) = 1.0;
      t.cosines(i, j) = dots(i, j) / (t.row_norms(i) * t.col_norms(j));
      t.scores(i, j) = t.cosines(i, j) / normalizers.u(j);
    }
  }
  return t;
}

// softmax(scores/tau) rowwise with max subtraction; also returns per-row
// log-sum-exp of the shifted scores plus the shift.
std::pair<Matrix, Vector> softmax_rows(const Matrix& scaled) {
  Matrix p(scaled.rows(), scaled.cols());
  Vector lse(scaled.rows());
  for (Index i = 0; i < scaled.rows(); ++i) {
    const double m = scaled.row(i).maxCoeff();
    Eigen::ArrayXd e = (scaled.row(i).array() - m).exp();
    const double sum = e.sum();
    p.row(i) = (e / sum).matrix();
    lse(i) = m + std::log(sum);
  }
  return {std::move(p), std::move(lse)};
}

void check_lcl_args(const Matrix& logits, const std::vector<int>& labels,
                    const Matrix& sk_vectors, const ClassNormalizers& normalizers,
                    double tau) {
  require(tau > 0.0, "lcl: tau must be positive");
  require(logits.rows() == static_cast<Index>(labels.size()),
          "lcl: label count mismatch");
  require(logits.cols() == sk_vectors.cols(), "lcl: logit width mismatch");
  require(normalizers.u.size() == sk_vectors.rows(), "lcl: normalizer length mismatch");
  for (int y : labels) {
    require(y >= 0 && y < sk_vectors.rows(), "lcl: label out of range");
  }
}

}  // namespace

double lcl_loss(const Matrix& logits, const std::vector<int>& labels,
                const Matrix& sk_vectors, const ClassNormalizers& normalizers,
                double tau, LclStats* stats) {
  check_lcl_args(logits, labels, sk_vectors, normalizers, tau);
  LclTerms t = lcl_terms(logits, sk_vectors, normalizers, stats);
  auto [p, lse] = softmax_rows(t.scores / tau);
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    total += lse(i) - t.scores(i, labels[static_cast<std::size_t>(i)]) / tau;
  }
  return total / static_cast<double>(logits.rows());
}

Matrix lcl_grad(const Matrix& logits, const std::vector<int>& labels,
                const Matrix& sk_vectors, const ClassNormalizers& normalizers,
                double tau, LclStats* stats) {
  check_lcl_args(logits, labels, sk_vectors, normalizers, tau);
  LclTerms t = lcl_terms(logits, sk_vectors, normalizers, stats);
  auto [p, lse] = softmax_rows(t.scores / tau);

  // d loss_i / d s_ij = (p_ij - [j == y_i]) / tau, and for valid pairs
  // d s_ij / d l_i = (c_j / (|l||c_j|) - cos_ij l_i / |l|^2) / U_j.
  Matrix grads = Matrix::Zero(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double nl = t.row_norms(i);
    if (nl == 0.0) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    Vector coef(sk_vectors.rows());
    for (Index j = 0; j < sk_vectors.rows(); ++j) {
      coef(j) = (p(i, j) - (j == y ? 1.0 : 0.0)) / tau * t.valid(i, j);
    }
    Vector w = coef.array() / (normalizers.u.array() * t.col_norms.array());
    // Columns with zero norm carry coef == 0; scrub the 0/0.
    for (Index j = 0; j < w.size(); ++j) {
      if (t.col_norms(j) == 0.0) w(j) = 0.0;
    }
    const double radial = coef.dot(t.scores.row(i).transpose());
    grads.row(i) = (sk_vectors.transpose() * w).transpose() / nl -
                   (radial / (nl * nl)) * logits.row(i);
  }
  return grads;
}

Matrix onehot(const std::vector<int>& labels, Index classes) {
  Matrix m = Matrix::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "onehot: label out of range");
    m(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return m;
}

std::pair<double, Matrix> ce_loss_grad(const Matrix& logits, const Matrix& labels_onehot) {
  require(logits.rows() == labels_onehot.rows() && logits.cols() == labels_onehot.cols(),
          "ce_loss_grad: shape mismatch");
  require(logits.rows() > 0, "ce_loss_grad: empty batch");
  auto [p, lse] = softmax_rows(logits);
  const auto batch = static_cast<double>(logits.rows());
  double loss = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    loss += lse(i) - labels_onehot.row(i).dot(logits.row(i));
  }
  Matrix grad = (p - labels_onehot) / batch;
  return {loss / batch, std::move(grad)};
}

std::pair<double, GradientSet> prox_term_grad(const ModelParams& params,
                                              const ModelParams& anchor, double mu) {
  require(same_shape(params, anchor), "prox_term_grad: shape mismatch");
  require(mu >= 0.0, "prox_term_grad: mu must be >= 0");
  GradientSet g;
  g.w1 = mu * (params.w1 - anchor.w1);
  g.b1 = mu * (params.b1 - anchor.b1);
  g.w2 = mu * (params.w2 - anchor.w2);
  g.b2 = mu * (params.b2 - anchor.b2);
  double sq = (params.w1 - anchor.w1).squaredNorm() +
              (params.b1 - anchor.b1).squaredNorm() +
              (params.w2 - anchor.w2).squaredNorm() +
              (params.b2 - anchor.b2).squaredNorm();
  return {0.5 * mu * sq, std::move(g)};
}

std::pair<double, GradientSet> backward(const ModelParams& params, const Matrix& x,
                                        const std::vector<int>& labels,
                                        const LossConfig& cfg,
                                        const LossInputs& inputs) {
  require(x.rows() == static_cast<Index>(labels.size()), "backward: label count mismatch");
  require(x.rows() > 0, "backward: empty batch");
  auto [z, logits] = forward_batch(params, x);
  const auto batch = static_cast<double>(x.rows());

  auto [loss, dlogits] = ce_loss_grad(logits, onehot(labels, params.class_count()));

  if (cfg.method == Method::FedSkc && cfg.lambda_lcl != 0.0) {
    if (inputs.sk_vectors == nullptr || inputs.normalizers == nullptr) {
      throw ConfigError("backward: contrastive loss enabled without global knowledge");
    }
    loss += cfg.lambda_lcl * lcl_loss(logits, labels, *inputs.sk_vectors,
                                      *inputs.normalizers, cfg.tau, inputs.stats);
    dlogits += (cfg.lambda_lcl / batch) *
               lcl_grad(logits, labels, *inputs.sk_vectors, *inputs.normalizers,
                        cfg.tau, nullptr);
  }

  // Backprop through logits = z w2^T + b2, z = relu(x w1^T + b1).
  GradientSet g;
  g.w2 = dlogits.transpose() * z;
  g.b2 = dlogits.colwise().sum().transpose();
  Matrix dz = dlogits * params.w2;
  // relu subgradient at 0 is 0: mask strictly positive activations.
  Matrix da = (z.array() > 0.0).cast<double>() * dz.array();
  g.w1 = da.transpose() * x;
  g.b1 = da.colwise().sum().transpose();

  if (cfg.method == Method::FedProx && cfg.mu_prox != 0.0) {
    if (inputs.prox_anchor == nullptr) {
      throw ConfigError("backward: proximal term enabled without anchor params");
    }
    auto [ploss, pg] = prox_term_grad(params, *inputs.prox_anchor, cfg.mu_prox);
    loss += ploss;
    g.w1 += pg.w1;
    g.b1 += pg.b1;
    g.w2 += pg.w2;
    g.b2 += pg.b2;
  }
  return {loss, std::move(g)};
}

}  // namespace fedsim
