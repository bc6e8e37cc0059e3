#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedsim {

// All numerical state is double precision. Matrices are row-major so the
// in-memory layout matches the flat serialization order of checkpoints.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// A violated call contract (shape mismatch, negative size, NaN input).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An invalid or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A run aborted mid-flight (non-finite loss during local training).
struct RunAbortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

template <typename Dense>
void require_finite(const Dense& value, const std::string& what) {
  if (!value.allFinite()) {
    throw ContractError(what + ": non-finite entries");
  }
}

inline void require_finite(double value, const std::string& what) {
  if (!std::isfinite(value)) {
    throw ContractError(what + ": non-finite value");
  }
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace fedsim
