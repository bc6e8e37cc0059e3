#pragma once

#include <cstdint>

namespace fedsim {

// User-supplied constants for the convergence-bound calculators. L1 is the
// smoothness constant of the objective, L2 the Lipschitz constant of the
// network output, B the gradient-norm bound, sigma2 the stochastic-gradient
// variance bound.
struct TheoryConstants {
  double l1 = 1.0;
  double l2 = 0.0;
  double grad_bound = 1.0;   // B
  double sigma2 = 0.0;
  std::int64_t local_steps = 1;  // E
  std::int64_t classes = 2;      // C
  std::int64_t neighbors = 1;    // M
  double eta = 0.01;
};

void validate(const TheoryConstants& c);

// Additive per-round change bound on the expected objective:
// -(eta - L1 eta^2 / 2) E B^2 + (L1 E eta^2 / 2) sigma2 + L2 E eta C B / (M+1).
double theorem1_drop(const TheoryConstants& c);

struct EtaMaxResult {
  double eta_max = 0.0;
  bool admissible = true;  // false when no positive rate satisfies the bound
};

// Largest admissible learning rate:
// [2 (M+1) B^2 - 2 L2 C B] / [L1 (M+1) (sigma2 + B^2)].
EtaMaxResult theorem2_eta_max(const TheoryConstants& c);

// Smallest integer round count R with
// R > 2 (M+1) (loss0 - loss*) / [xi E eta (M+1)(2 - L1 eta) - P - H],
// P = (M+1) L1 E eta^2 sigma2, H = 2 L2 E eta C B. Throws when the rate
// condition makes the denominator non-positive.
std::int64_t theorem3_min_rounds(const TheoryConstants& c, double xi,
                                 double loss0, double loss_star);

}  // namespace fedsim
