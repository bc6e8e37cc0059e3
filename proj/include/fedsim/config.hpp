#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/losses.hpp"
#include "fedsim/server.hpp"

namespace fedsim {

struct FederationConfig {
  std::int64_t clients = 20;  // K
  std::int64_t rounds = 200;  // R
  double epsilon = 0.4;       // active client ratio per round

  bool operator==(const FederationConfig&) const = default;
};

struct TrainConfig {
  std::int64_t epochs = 10;  // E
  std::int64_t batch = 64;
  double eta = 0.01;
  std::int64_t hidden = 64;
  std::int64_t threads = 1;  // client-level parallelism within a round

  bool operator==(const TrainConfig&) const = default;
};

struct FedskcConfig {
  double tau = 0.08;
  double beta = 0.95;
  std::int64_t neighbors = 1;  // M
  double lambda_lcl = 1.0;
  double u_floor = 1e-8;
  bool gda = true;
  std::string gda_mode = "normalized";  // "normalized" | "raw"
  bool gpr = true;
  bool gpr_affine = false;

  bool operator==(const FedskcConfig&) const = default;
};

struct FedproxConfig {
  double mu = 0.01;

  bool operator==(const FedproxConfig&) const = default;
};

struct DataConfig {
  std::int64_t classes = 10;  // C
  std::int64_t input_dim = 32;
  std::int64_t n_max = 500;  // head-class training count
  double rho = 1.0;          // imbalance ratio (1 = balanced)
  double alpha = 0.2;        // Dirichlet concentration
  double sep = 3.0;          // class-center radius
  double noise = 1.0;        // sample noise scale
  std::int64_t test_per_class = 100;

  bool operator==(const DataConfig&) const = default;
};

struct TheoryConfig {
  double l1 = 1.0;
  double l2 = 0.0;
  double grad_bound = 1.0;
  double sigma2 = 0.0;
  double xi = 1.0;
  double loss0 = 1.0;
  double loss_star = 0.0;

  bool operator==(const TheoryConfig&) const = default;
};

struct ReportConfig {
  std::vector<double> targets = {0.4, 0.5};

  bool operator==(const ReportConfig&) const = default;
};

struct ExperimentConfig {
  std::string method = "fedskc";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // non-empty enables the multi-seed loop
  std::string out = "out";
  FederationConfig federation;
  TrainConfig train;
  FedskcConfig fedskc;
  FedproxConfig fedprox;
  DataConfig data;
  TheoryConfig theory;
  ReportConfig report;

  Method method_enum() const;
  GdaMode gda_mode_enum() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Reads JSON from path (empty document allowed: all defaults), applies dotted
// key=value overrides, validates. Unknown keys and out-of-range values raise
// ConfigError naming the key.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides);

// Parses a JSON document given as text; path is used in messages only.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides,
                                   const std::string& origin = "<inline>");

void validate_config(const ExperimentConfig& cfg);

// Serializes the config back to a JSON document that parse_config_text
// round-trips to an equal config.
std::string write_back(const ExperimentConfig& cfg);

}  // namespace fedsim
