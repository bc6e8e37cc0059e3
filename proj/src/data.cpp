#include "fedsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fedsim/util.hpp"

namespace fedsim {

using json = nlohmann::json;

Matrix ClientDataset::feature_matrix() const {
  if (samples.empty()) return Matrix();
  Matrix x(static_cast<Index>(samples.size()), samples.front().features.size());
  for (Index i = 0; i < x.rows(); ++i) {
    x.row(i) = samples[static_cast<std::size_t>(i)].features.transpose();
  }
  return x;
}

std::vector<int> ClientDataset::labels() const {
  std::vector<int> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.label);
  return y;
}

std::vector<std::int64_t> longtail_profile(int classes, std::int64_t n_max, double rho) {
  require(classes >= 2, "longtail_profile: need at least 2 classes");
  require(rho >= 1.0, "longtail_profile: rho must be >= 1");
  require(n_max >= 1, "longtail_profile: n_max must be >= 1");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(classes));
  for (int j = 0; j < classes; ++j) {
    double frac = std::pow(rho, -static_cast<double>(j) / (classes - 1));
    counts[static_cast<std::size_t>(j)] =
        std::max<std::int64_t>(1, std::llround(static_cast<double>(n_max) * frac));
  }
  return counts;
}

Matrix class_centers(int classes, int input_dim, double sep, Rng& rng) {
  require(classes >= 2 && input_dim >= 2, "class_centers: degenerate dimensions");
  require(sep > 0.0, "class_centers: sep must be positive");
  Matrix centers(classes, input_dim);
  for (int j = 0; j < classes; ++j) {
    Vector dir(input_dim);
    do {
      for (Index i = 0; i < input_dim; ++i) dir(i) = rng.normal();
    } while (dir.norm() == 0.0);
    centers.row(j) = (sep / dir.norm()) * dir.transpose();
  }
  return centers;
}

std::vector<Sample> sample_blobs(const Matrix& centers,
                                 const std::vector<std::int64_t>& profile,
                                 double noise, Rng& rng) {
  require(static_cast<Index>(profile.size()) == centers.rows(),
          "sample_blobs: profile length != class count");
  require(noise > 0.0, "sample_blobs: noise must be positive");
  std::vector<Sample> out;
  for (Index j = 0; j < centers.rows(); ++j) {
    for (std::int64_t n = 0; n < profile[static_cast<std::size_t>(j)]; ++n) {
      Vector x(centers.cols());
      for (Index i = 0; i < centers.cols(); ++i) {
        x(i) = centers(j, i) + noise * rng.normal();
      }
      out.push_back(Sample{std::move(x), static_cast<int>(j)});
    }
  }
  return out;
}

std::vector<Sample> synth_dataset(int classes,
                                  const std::vector<std::int64_t>& profile,
                                  int input_dim, double sep, double noise,
                                  Rng& rng) {
  Matrix centers = class_centers(classes, input_dim, sep, rng);
  return sample_blobs(centers, profile, noise, rng);
}

std::string assignment_checksum(const std::vector<std::vector<std::int64_t>>& assignment) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& indices : assignment) {
    for (std::int64_t idx : indices) {
      auto v = static_cast<std::uint64_t>(idx);
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffULL;
        h *= 0x100000001b3ULL;
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

PartitionResult dirichlet_partition(const std::vector<Sample>& samples,
                                    int classes, int num_clients, double alpha,
                                    Rng& rng) {
  require(alpha > 0.0, "dirichlet_partition: alpha must be positive");
  require(num_clients >= 1, "dirichlet_partition: need at least one client");
  require(classes >= 1, "dirichlet_partition: need at least one class");

  // Sample indices grouped by class, preserving dataset order.
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int y = samples[i].label;
    require(y >= 0 && y < classes, "dirichlet_partition: label out of range");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<std::int64_t>(i));
  }

  const auto k = static_cast<std::size_t>(num_clients);
  std::vector<std::vector<std::int64_t>> assignment(k);
  for (int j = 0; j < classes; ++j) {
    const auto& idxs = by_class[static_cast<std::size_t>(j)];
    std::vector<double> p = rng.dirichlet(alpha, k);
    // Cumulative rounding: client c gets [round(n*P_{c-1}), round(n*P_c)).
    const auto n = static_cast<double>(idxs.size());
    double cum = 0.0;
    std::int64_t prev = 0;
    for (std::size_t c = 0; c < k; ++c) {
      cum += p[c];
      auto bound = (c + 1 == k) ? static_cast<std::int64_t>(idxs.size())
                                : std::llround(n * cum);
      bound = std::clamp<std::int64_t>(bound, prev, static_cast<std::int64_t>(idxs.size()));
      for (std::int64_t i = prev; i < bound; ++i) {
        assignment[c].push_back(idxs[static_cast<std::size_t>(i)]);
      }
      prev = bound;
    }
  }

  PartitionResult result;
  result.clients.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& client = result.clients[c];
    client.client_id = static_cast<int>(c);
    client.per_class_counts.assign(static_cast<std::size_t>(classes), 0);
    for (std::int64_t idx : assignment[c]) {
      const auto& s = samples[static_cast<std::size_t>(idx)];
      client.samples.push_back(s);
      ++client.per_class_counts[static_cast<std::size_t>(s.label)];
    }
  }

  auto& m = result.manifest;
  m.alpha = alpha;
  m.clients = num_clients;
  m.classes = classes;
  m.counts.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    m.counts[c] = result.clients[c].per_class_counts;
  }
  m.checksum = assignment_checksum(assignment);
  return result;
}

std::string manifest_to_json(const PartitionManifest& manifest) {
  json j;
  j["seed"] = manifest.seed;
  j["alpha"] = manifest.alpha;
  j["rho"] = manifest.rho;
  j["K"] = manifest.clients;
  j["C"] = manifest.classes;
  j["counts"] = manifest.counts;
  j["checksum"] = manifest.checksum;
  return j.dump(2);
}

PartitionManifest manifest_from_json(const std::string& text) {
  json j = json::parse(text);
  PartitionManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.alpha = j.at("alpha").get<double>();
  m.rho = j.at("rho").get<double>();
  m.clients = j.at("K").get<int>();
  m.classes = j.at("C").get<int>();
  m.counts = j.at("counts").get<std::vector<std::vector<std::int64_t>>>();
  m.checksum = j.at("checksum").get<std::string>();
  return m;
}

void write_manifest(const std::string& path, const PartitionManifest& manifest) {
  write_file_atomic(path, manifest_to_json(manifest) + "\n");
}

PartitionManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

}  // namespace fedsim
