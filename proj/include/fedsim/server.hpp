#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/structural.hpp"

namespace fedsim {

enum class GdaMode { Normalized, Raw };

// Weights aligned with the caller's participant ordering; non-negative and
// summing to one.
using AggregationWeights = Vector;

void check_aggregation_weights(const AggregationWeights& w);

// Uniform sample without replacement of size max(1, round(epsilon * K)),
// returned in ascending id order.
std::vector<int> sample_clients(int num_clients, double epsilon, Rng& rng);

// e_k = N_k / sum N.
AggregationWeights fedavg_weights(const std::vector<std::int64_t>& sizes);

struct GdaResult {
  AggregationWeights weights;
  bool fell_back = false;  // all discrepancies zero, plain size weighting used
};

// Sigmoid(size term - a_k d_k + b_k) normalized over participants, with
// a_k = d_k / sum d and b_k = N_k / sum N. Normalized mode feeds b_k as the
// size term; raw mode feeds N_k itself, which saturates for realistic sizes.
GdaResult gda_weights(const std::vector<std::int64_t>& sizes,
                      const std::vector<double>& discrepancies, GdaMode mode);

// Elementwise weighted sum of parameter sets.
ModelParams aggregate(const std::vector<ModelParams>& params_list,
                      const AggregationWeights& weights);

// Server state carried between rounds.
struct FederationState {
  std::int64_t round = 0;  // rounds completed so far
  ModelParams global;
  ModelParams prev_global;
  GlobalSk sk;
  GlobalSk prev_sk;
  Vector variances;       // per class, for sk
  Vector prev_variances;  // per class, for prev_sk
};

Vector class_variances(const GlobalSk& sk);

struct GprResult {
  ModelParams params;
  double gamma = 0.0;
  bool skipped = false;  // previous-round variance sum below threshold
};

// Review step: gamma = sum_j (var_r(j) - var_{r-1}(j)) / sum_j var_{r-1}(j),
// result = beta w_r + (1-beta) gamma (w_{r-1} - w_r). The affine variant reads
// the blend as beta w_r + (1-beta)(w_r + gamma (w_{r-1} - w_r)).
GprResult gpr_update(const FederationState& state, double beta, bool affine = false);

}  // namespace fedsim
