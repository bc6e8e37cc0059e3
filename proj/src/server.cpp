#include "fedsim/server.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedsim {

namespace {
constexpr double kGprVarianceThreshold = 1e-12;
}

void check_aggregation_weights(const AggregationWeights& w) {
  require(w.size() > 0, "aggregation weights: empty");
  require((w.array() >= 0.0).all(), "aggregation weights: negative entry");
  require(std::abs(w.sum() - 1.0) <= 1e-9, "aggregation weights: sum != 1");
}

std::vector<int> sample_clients(int num_clients, double epsilon, Rng& rng) {
  require(num_clients >= 1, "sample_clients: need at least one client");
  require(epsilon > 0.0 && epsilon <= 1.0, "sample_clients: epsilon in (0, 1]");
  const auto take = std::max<std::int64_t>(
      1, std::llround(epsilon * static_cast<double>(num_clients)));
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: the first `take` slots are a uniform subset.
  for (std::int64_t i = 0; i < take; ++i) {
    auto j = i + static_cast<std::int64_t>(
                     rng.below(static_cast<std::uint64_t>(num_clients - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(static_cast<std::size_t>(take));
  std::sort(ids.begin(), ids.end());
  return ids;
}

AggregationWeights fedavg_weights(const std::vector<std::int64_t>& sizes) {
  require(!sizes.empty(), "fedavg_weights: no participants");
  std::int64_t total = 0;
  for (auto n : sizes) {
    require(n >= 0, "fedavg_weights: negative size");
    total += n;
  }
  require(total > 0, "fedavg_weights: zero total size");
  AggregationWeights w(static_cast<Index>(sizes.size()));
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    w(static_cast<Index>(k)) =
        static_cast<double>(sizes[k]) / static_cast<double>(total);
  }
  return w;
}

GdaResult gda_weights(const std::vector<std::int64_t>& sizes,
                      const std::vector<double>& discrepancies, GdaMode mode) {
  require(sizes.size() == discrepancies.size(), "gda_weights: length mismatch");
  require(!sizes.empty(), "gda_weights: no participants");
  double sum_d = 0.0;
  std::int64_t sum_n = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    require(sizes[k] >= 0, "gda_weights: negative size");
    require(discrepancies[k] >= 0.0, "gda_weights: negative discrepancy");
    sum_d += discrepancies[k];
    sum_n += sizes[k];
  }
  require(sum_n > 0, "gda_weights: zero total size");

  GdaResult result;
  if (!(sum_d > 0.0)) {
    result.weights = fedavg_weights(sizes);
    result.fell_back = true;
    return result;
  }

  const auto n = static_cast<Index>(sizes.size());
  Vector sig(n);
  for (Index k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double a = discrepancies[ku] / sum_d;
    const double b = static_cast<double>(sizes[ku]) / static_cast<double>(sum_n);
    const double size_term =
        mode == GdaMode::Raw ? static_cast<double>(sizes[ku]) : b;
    sig(k) = sigmoid(size_term - a * discrepancies[ku] + b);
  }
  result.weights = sig / sig.sum();
  return result;
}

ModelParams aggregate(const std::vector<ModelParams>& params_list,
                      const AggregationWeights& weights) {
  require(!params_list.empty(), "aggregate: no parameter sets");
  require(static_cast<Index>(params_list.size()) == weights.size(),
          "aggregate: weight count mismatch");
  check_aggregation_weights(weights);
  for (const auto& p : params_list) {
    require(same_shape(params_list.front(), p), "aggregate: shape mismatch");
  }
  ModelParams out;
  const auto& first = params_list.front();
  out.w1 = Matrix::Zero(first.w1.rows(), first.w1.cols());
  out.b1 = Vector::Zero(first.b1.size());
  out.w2 = Matrix::Zero(first.w2.rows(), first.w2.cols());
  out.b2 = Vector::Zero(first.b2.size());
  for (std::size_t k = 0; k < params_list.size(); ++k) {
    const double e = weights(static_cast<Index>(k));
    out.w1 += e * params_list[k].w1;
    out.b1 += e * params_list[k].b1;
    out.w2 += e * params_list[k].w2;
    out.b2 += e * params_list[k].b2;
  }
  require_finite(out.w1, "aggregate");
  require_finite(out.w2, "aggregate");
  return out;
}

Vector class_variances(const GlobalSk& sk) {
  Vector v(sk.class_count());
  for (Index j = 0; j < sk.class_count(); ++j) {
    v(j) = sk_variance(sk, static_cast<int>(j));
  }
  return v;
}

GprResult gpr_update(const FederationState& state, double beta, bool affine) {
  require(state.round >= 1, "gpr_update: needs a previous round");
  require(beta >= 0.0 && beta <= 1.0, "gpr_update: beta in [0, 1]");
  require(state.variances.size() == state.prev_variances.size(),
          "gpr_update: variance length mismatch");

  GprResult result;
  const double prev_sum = state.prev_variances.sum();
  if (prev_sum < kGprVarianceThreshold) {
    result.params = state.global;
    result.skipped = true;
    return result;
  }
  const double gamma = (state.variances - state.prev_variances).sum() / prev_sum;
  result.gamma = gamma;
  const double shift = (1.0 - beta) * gamma;
  ModelParams out;
  if (affine) {
    // w = beta w_r + (1-beta)(w_r + gamma (w_prev - w_r))
    out.w1 = state.global.w1 + shift * (state.prev_global.w1 - state.global.w1);
    out.b1 = state.global.b1 + shift * (state.prev_global.b1 - state.global.b1);
    out.w2 = state.global.w2 + shift * (state.prev_global.w2 - state.global.w2);
    out.b2 = state.global.b2 + shift * (state.prev_global.b2 - state.global.b2);
  } else {
    out.w1 = beta * state.global.w1 + shift * (state.prev_global.w1 - state.global.w1);
    out.b1 = beta * state.global.b1 + shift * (state.prev_global.b1 - state.global.b1);
    out.w2 = beta * state.global.w2 + shift * (state.prev_global.w2 - state.global.w2);
    out.b2 = beta * state.global.b2 + shift * (state.prev_global.b2 - state.global.b2);
  }
  require_finite(out.w1, "gpr_update");
  require_finite(out.w2, "gpr_update");
  result.params = std::move(out);
  return result;
}

}  // namespace fedsim
