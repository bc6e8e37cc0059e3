#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedsim {

// One row of the per-round metrics log.
struct RoundMetrics {
  std::int64_t round = 0;
  std::string method;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::vector<std::int64_t> participants;  // sorted client ids
  std::optional<double> gamma;             // absent when no period review ran
  double wall_ms = 0.0;
};

std::string metrics_header();
std::string metrics_row(const RoundMetrics& m);

void write_metrics_csv(const std::string& path,
                       const std::vector<RoundMetrics>& rows);
std::vector<RoundMetrics> read_metrics_csv(const std::string& path);

// First round index whose test accuracy reaches the target, or nullopt.
std::optional<std::int64_t> rounds_to_target(
    const std::vector<RoundMetrics>& rows, double target);

}  // namespace fedsim
