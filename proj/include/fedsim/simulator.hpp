#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/data.hpp"
#include "fedsim/losses.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"
#include "fedsim/server.hpp"
#include "fedsim/structural.hpp"

namespace fedsim {

struct TestSet {
  Matrix features;          // row per sample
  std::vector<int> labels;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
};

// Fraction of samples whose argmax logit (ties toward the lower class index)
// equals the label.
double evaluate(const ModelParams& params, const TestSet& test);

struct LocalTrainResult {
  ModelParams params;
  LocalSk sk;
  double train_loss = 0.0;     // sample-weighted mean over the last epoch
  double max_grad_norm = 0.0;  // largest batch-gradient norm seen
};

// E epochs of mini-batch SGD on one client. The objective follows cfg.method;
// global_sk may be null (first round), which disables the contrastive term.
// Batch order comes entirely from shuffle_rng. Non-finite loss aborts with the
// client and round in the message.
LocalTrainResult local_train(const ClientDataset& client,
                             const ModelParams& init, const GlobalSk* global_sk,
                             const ExperimentConfig& cfg, Rng shuffle_rng,
                             std::int64_t round);

// One seeded run's fixed world: partitioned clients, balanced test set, and
// the stream factory everything draws from.
struct Experiment {
  ExperimentConfig cfg;
  StreamFactory streams;
  std::vector<ClientDataset> clients;
  PartitionManifest manifest;
  TestSet test;

  static Experiment prepare(const ExperimentConfig& cfg, std::uint64_t seed);
};

struct RoundOutcome {
  FederationState state;
  RoundMetrics metrics;
  std::string server_log;      // tab-separated: round method |A| min_e max_e gamma skip
  double max_grad_norm = 0.0;
};

// Executes round r: sample, broadcast, local training (optionally threaded),
// knowledge merge and weighting per method, aggregation, period review, and
// evaluation.
RoundOutcome run_round(const Experiment& exp, const FederationState& state,
                       std::int64_t r);

FederationState initial_state(const Experiment& exp);

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> metrics;
  ModelParams final_params;
  GlobalSk final_sk;
  PartitionManifest manifest;
  double max_grad_norm = 0.0;
};

// All rounds for one seed; server log lines go to log when non-null.
SeedRunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                       std::ostream* log);

struct ExperimentResult {
  std::vector<SeedRunResult> runs;
  double final_acc_mean = 0.0;
  double final_acc_std = 0.0;  // population over seeds
};

// Runs every configured seed, writing per-seed metrics, manifests, and
// checkpoints plus a cross-seed summary under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir, std::ostream* log);

std::vector<std::uint64_t> resolved_seeds(const ExperimentConfig& cfg);

std::string metrics_filename(const std::string& method, std::uint64_t seed);
std::string checkpoint_filename(const std::string& method, std::uint64_t seed);
std::string manifest_filename(std::uint64_t seed);

}  // namespace fedsim
