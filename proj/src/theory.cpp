#include "fedsim/theory.hpp"

#include <cmath>
#include <string>

#include "fedsim/linalg.hpp"

namespace fedsim {

void validate(const TheoryConstants& c) {
  require(c.l1 >= 0.0, "theory: L1 must be nonnegative");
  require(c.l2 >= 0.0, "theory: L2 must be nonnegative");
  require(c.grad_bound >= 0.0, "theory: gradient bound must be nonnegative");
  require(c.sigma2 >= 0.0, "theory: sigma2 must be nonnegative");
  require(c.local_steps >= 1, "theory: local step count must be at least 1");
  require(c.classes >= 2, "theory: class count must be at least 2");
  require(c.neighbors >= 0, "theory: neighbor count must be nonnegative");
  require(c.eta >= 0.0, "theory: eta must be nonnegative");
  require_finite(c.l1, "L1");
  require_finite(c.l2, "L2");
  require_finite(c.grad_bound, "B");
  require_finite(c.sigma2, "sigma2");
  require_finite(c.eta, "eta");
}

double theorem1_drop(const TheoryConstants& c) {
  validate(c);
  const double e = static_cast<double>(c.local_steps);
  const double cc = static_cast<double>(c.classes);
  const double m1 = static_cast<double>(c.neighbors + 1);
  const double b = c.grad_bound;
  const double descent = -(c.eta - c.l1 * c.eta * c.eta / 2.0) * e * b * b;
  const double noise = c.l1 * e * c.eta * c.eta / 2.0 * c.sigma2;
  const double drift = c.l2 * e * c.eta * cc * b / m1;
  return descent + noise + drift;
}

EtaMaxResult theorem2_eta_max(const TheoryConstants& c) {
  validate(c);
  const double cc = static_cast<double>(c.classes);
  const double m1 = static_cast<double>(c.neighbors + 1);
  const double b = c.grad_bound;
  const double numer = 2.0 * m1 * b * b - 2.0 * c.l2 * cc * b;
  const double denom = c.l1 * m1 * (c.sigma2 + b * b);
  require(denom > 0.0, "theory: denominator L1(M+1)(sigma2+B^2) must be positive");
  EtaMaxResult out;
  if (numer <= 0.0) {
    out.eta_max = 0.0;
    out.admissible = false;
    return out;
  }
  out.eta_max = numer / denom;
  out.admissible = true;
  return out;
}

std::int64_t theorem3_min_rounds(const TheoryConstants& c, double xi,
                                 double loss0, double loss_star) {
  validate(c);
  require(xi > 0.0, "theory: xi must be positive");
  require_finite(xi, "xi");
  require_finite(loss0, "loss0");
  require_finite(loss_star, "loss_star");
  require(loss0 >= loss_star,
          "theory: initial loss must be at least the optimal loss");
  const double e = static_cast<double>(c.local_steps);
  const double cc = static_cast<double>(c.classes);
  const double m1 = static_cast<double>(c.neighbors + 1);
  const double b = c.grad_bound;
  const double progress = xi * e * c.eta * m1 * (2.0 - c.l1 * c.eta);
  const double noise = m1 * c.l1 * e * c.eta * c.eta * c.sigma2;
  const double drift = 2.0 * c.l2 * e * c.eta * cc * b;
  const double denom = progress - noise - drift;
  if (denom <= 0.0) {
    throw ContractError(
        "theory: rate condition violated, eta too large for the given "
        "constants (denominator " +
        std::to_string(denom) + " is not positive)");
  }
  const double bound = 2.0 * m1 * (loss0 - loss_star) / denom;
  // Smallest integer strictly greater than the bound.
  const double floor_val = std::floor(bound);
  std::int64_t rounds = static_cast<std::int64_t>(floor_val) + 1;
  if (rounds < 1) rounds = 1;
  return rounds;
}

}  // namespace fedsim
