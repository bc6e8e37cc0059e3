#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fedsim {

struct MethodSummary {
  std::string method;
  std::int64_t seeds = 0;
  double final_acc_mean = 0.0;
  double final_acc_std = 0.0;  // population
  // Mean first round reaching each target; absent when any seed never reaches.
  std::vector<std::optional<double>> rounds_to_target;
};

struct ReportTable {
  std::vector<double> targets;
  std::vector<MethodSummary> methods;  // in first-appearance order
};

// Reads one (method, seed) run per metrics file and groups them by method.
// Files with mixed methods or seeds, or unreadable schemas, raise errors
// naming the file.
ReportTable build_report(const std::vector<std::string>& metric_files,
                         const std::vector<double>& targets);

std::string report_csv(const ReportTable& table);
std::string report_text(const ReportTable& table);

}  // namespace fedsim
