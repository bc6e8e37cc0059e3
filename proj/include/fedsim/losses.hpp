#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

enum class Method { FedAvg, FedProx, FedSkc };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct LossConfig {
  Method method = Method::FedAvg;
  double tau = 0.08;        // contrastive temperature, > 0
  double mu_prox = 0.0;     // proximal coefficient, >= 0
  double lambda_lcl = 1.0;  // weight of the contrastive term
  double u_floor = 1e-8;    // clamp for the similarity normalizer
};

// Per-class similarity normalizers U, refreshed once per local epoch over the
// client's full dataset and held constant inside gradients.
struct ClassNormalizers {
  Vector u;  // length C, each entry >= u_floor
};

struct LclStats {
  std::int64_t zero_norm_pairs = 0;  // (logit, knowledge) pairs with a zero norm
};

// U[j] = max(u_floor, mean over all rows of ||l_i - c~^j||_2).
ClassNormalizers compute_normalizers(const Matrix& logits, const Matrix& sk_vectors,
                                     double u_floor);
ClassNormalizers compute_normalizers(const ModelParams& params,
                                     const ClientDataset& dataset,
                                     const Matrix& sk_vectors, double u_floor);

// cosine(l, c) / u; zero-norm inputs yield 0.
double lcl_similarity(const Vector& logit, const Vector& sk_vector, double u);

// Mean over the batch of -log softmax(s / tau) at the true class,
// max-subtracted for stability.
double lcl_loss(const Matrix& logits, const std::vector<int>& labels,
                const Matrix& sk_vectors, const ClassNormalizers& normalizers,
                double tau, LclStats* stats = nullptr);

// Row i = d(sample i's own contrastive term)/d(logit i); the normalizers and
// knowledge vectors are constants. Callers apply the batch mean.
Matrix lcl_grad(const Matrix& logits, const std::vector<int>& labels,
                const Matrix& sk_vectors, const ClassNormalizers& normalizers,
                double tau, LclStats* stats = nullptr);

Matrix onehot(const std::vector<int>& labels, Index classes);

// Mean softmax cross-entropy and its gradient (softmax - onehot)/batch.
std::pair<double, Matrix> ce_loss_grad(const Matrix& logits, const Matrix& labels_onehot);

// (mu/2) ||w - w_g||^2 over all weight arrays, gradient mu (w - w_g).
std::pair<double, GradientSet> prox_term_grad(const ModelParams& params,
                                              const ModelParams& anchor, double mu);

// References the objective needs beyond the raw batch; which ones must be
// present depends on cfg.method.
struct LossInputs {
  const Matrix* sk_vectors = nullptr;        // C x C global knowledge rows
  const ClassNormalizers* normalizers = nullptr;
  const ModelParams* prox_anchor = nullptr;  // broadcast global params
  LclStats* stats = nullptr;
};

// Batch-mean objective and its exact analytic gradients through the model.
std::pair<double, GradientSet> backward(const ModelParams& params, const Matrix& x,
                                        const std::vector<int>& labels,
                                        const LossConfig& cfg,
                                        const LossInputs& inputs);

}  // namespace fedsim
