#include "fedsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "fedsim/linalg.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

struct SeedOutcome {
  double final_acc = 0.0;
  std::vector<std::optional<std::int64_t>> reach;  // per target
};

std::string target_label(double target) {
  return "rounds_to_" + format_double(target);
}

}  // namespace

ReportTable build_report(const std::vector<std::string>& metric_files,
                         const std::vector<double>& targets) {
  require(!metric_files.empty(), "report: need at least one metrics file");
  ReportTable table;
  table.targets = targets;

  std::vector<std::string> order;                      // methods as seen
  std::vector<std::vector<SeedOutcome>> per_method;    // parallel to order
  for (const auto& path : metric_files) {
    const auto rows = read_metrics_csv(path);
    if (rows.empty()) throw ConfigError("report: no data rows in " + path);
    const std::string& method = rows.front().method;
    const auto seed = rows.front().seed;
    for (const auto& r : rows) {
      if (r.method != method || r.seed != seed)
        throw ConfigError("report: " + path +
                          " mixes several runs; expected one method and seed "
                          "per file");
    }
    SeedOutcome outcome;
    outcome.final_acc = rows.back().test_acc;
    for (const double t : targets)
      outcome.reach.push_back(rounds_to_target(rows, t));

    auto it = std::find(order.begin(), order.end(), method);
    std::size_t slot;
    if (it == order.end()) {
      order.push_back(method);
      per_method.emplace_back();
      slot = order.size() - 1;
    } else {
      slot = static_cast<std::size_t>(it - order.begin());
    }
    per_method[slot].push_back(std::move(outcome));
  }

  for (std::size_t m = 0; m < order.size(); ++m) {
    const auto& outcomes = per_method[m];
    MethodSummary s;
    s.method = order[m];
    s.seeds = static_cast<std::int64_t>(outcomes.size());
    double mean = 0.0;
    for (const auto& o : outcomes) mean += o.final_acc;
    mean /= static_cast<double>(outcomes.size());
    double var = 0.0;
    for (const auto& o : outcomes) {
      const double d = o.final_acc - mean;
      var += d * d;
    }
    var /= static_cast<double>(outcomes.size());
    s.final_acc_mean = mean;
    s.final_acc_std = std::sqrt(var);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double sum = 0.0;
      bool all_reached = true;
      for (const auto& o : outcomes) {
        if (!o.reach[t]) {
          all_reached = false;
          break;
        }
        sum += static_cast<double>(*o.reach[t]);
      }
      if (all_reached)
        s.rounds_to_target.emplace_back(sum /
                                        static_cast<double>(outcomes.size()));
      else
        s.rounds_to_target.emplace_back(std::nullopt);
    }
    table.methods.push_back(std::move(s));
  }
  return table;
}

std::string report_csv(const ReportTable& table) {
  std::string out = "method,seeds,final_acc_mean,final_acc_std";
  for (const double t : table.targets) out += "," + target_label(t);
  out += '\n';
  for (const auto& m : table.methods) {
    out += m.method + "," + std::to_string(m.seeds) + "," +
           format_double(m.final_acc_mean) + "," +
           format_double(m.final_acc_std);
    for (const auto& r : m.rounds_to_target)
      out += "," + (r ? format_double(*r) : std::string("-"));
    out += '\n';
  }
  return out;
}

std::string report_text(const ReportTable& table) {
  std::vector<std::string> headers = {"method", "seeds", "final_acc"};
  for (const double t : table.targets) headers.push_back(target_label(t));

  std::vector<std::vector<std::string>> rows;
  for (const auto& m : table.methods) {
    std::ostringstream acc;
    acc << std::fixed << std::setprecision(4) << m.final_acc_mean << " +/- "
        << std::setprecision(4) << m.final_acc_std;
    std::vector<std::string> row = {m.method, std::to_string(m.seeds),
                                    acc.str()};
    for (const auto& r : m.rounds_to_target) {
      if (r) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << *r;
        row.push_back(cell.str());
      } else {
        row.push_back("-");
      }
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      if (c + 1 < row.size()) out << "  ";
    }
    out << '\n';
  };
  emit(headers);
  for (const auto& row : rows) emit(row);
  return out.str();
}

}  // namespace fedsim
