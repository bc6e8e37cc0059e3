#include "fedsim/metrics.hpp"

#include <fstream>
#include <sstream>

#include "fedsim/linalg.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string metrics_header() {
  return "round,method,seed,train_loss,test_acc,participants,gamma,wall_ms";
}

std::string metrics_row(const RoundMetrics& m) {
  std::string participants;
  for (std::size_t i = 0; i < m.participants.size(); ++i) {
    if (i > 0) participants += ';';
    participants += std::to_string(m.participants[i]);
  }
  std::string row;
  row += std::to_string(m.round);
  row += ',';
  row += m.method;
  row += ',';
  row += std::to_string(m.seed);
  row += ',';
  row += format_double(m.train_loss);
  row += ',';
  row += format_double(m.test_acc);
  row += ',';
  row += participants;
  row += ',';
  if (m.gamma) row += format_double(*m.gamma);
  row += ',';
  row += format_double(m.wall_ms);
  return row;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<RoundMetrics>& rows) {
  std::string body = metrics_header();
  body += '\n';
  for (const auto& r : rows) {
    body += metrics_row(r);
    body += '\n';
  }
  write_file_atomic(path, body);
}

std::vector<RoundMetrics> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("metrics: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_header())
    throw ConfigError("metrics: unexpected header in " + path + ": " + line);
  std::vector<RoundMetrics> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 8)
      throw ConfigError("metrics: bad row in " + path + ": " + line);
    RoundMetrics m;
    m.round = std::stoll(fields[0]);
    m.method = fields[1];
    m.seed = std::stoull(fields[2]);
    m.train_loss = std::stod(fields[3]);
    m.test_acc = std::stod(fields[4]);
    if (!fields[5].empty()) {
      for (const auto& part : split(fields[5], ';')) {
        if (!part.empty()) m.participants.push_back(std::stoll(part));
      }
    }
    if (!fields[6].empty()) m.gamma = std::stod(fields[6]);
    m.wall_ms = std::stod(fields[7]);
    rows.push_back(std::move(m));
  }
  return rows;
}

std::optional<std::int64_t> rounds_to_target(
    const std::vector<RoundMetrics>& rows, double target) {
  for (const auto& r : rows) {
    if (r.test_acc >= target) return r.round;
  }
  return std::nullopt;
}

}  // namespace fedsim
