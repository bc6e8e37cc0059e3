#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/linalg.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

struct Sample {
  Vector features;
  int label = 0;
};

struct ClientDataset {
  int client_id = 0;
  std::vector<Sample> samples;
  std::vector<std::int64_t> per_class_counts;  // N_k^j, length C

  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }

  // Row-per-sample views for batched math.
  Matrix feature_matrix() const;
  std::vector<int> labels() const;
};

struct PartitionManifest {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double rho = 1.0;
  int clients = 0;
  int classes = 0;
  std::vector<std::vector<std::int64_t>> counts;  // K x C
  std::string checksum;                           // 16 hex digits, FNV-1a 64

  bool operator==(const PartitionManifest&) const = default;
};

// Exponential long-tail profile: count_j = max(1, round(n_max * rho^(-j/(C-1)))).
std::vector<std::int64_t> longtail_profile(int classes, std::int64_t n_max, double rho);

// One fixed center per class on the radius-sep sphere, drawn from the stream
// (normalized Gaussian directions). Row j = center of class j.
Matrix class_centers(int classes, int input_dim, double sep, Rng& rng);

// Gaussian blobs around given centers; class j contributes profile[j] samples
// mu_j + noise * N(0, I), grouped by class in ascending label order.
std::vector<Sample> sample_blobs(const Matrix& centers,
                                 const std::vector<std::int64_t>& profile,
                                 double noise, Rng& rng);

// Centers and samples from one stream (centers drawn first).
std::vector<Sample> synth_dataset(int classes,
                                  const std::vector<std::int64_t>& profile,
                                  int input_dim, double sep, double noise,
                                  Rng& rng);

struct PartitionResult {
  std::vector<ClientDataset> clients;
  PartitionManifest manifest;
};

// Per-class Dirichlet(alpha) proportions over clients; each class's samples
// are split by cumulative rounding so every sample lands exactly once.
// Empty clients are permitted and recorded in the manifest.
PartitionResult dirichlet_partition(const std::vector<Sample>& samples,
                                    int classes, int num_clients, double alpha,
                                    Rng& rng);

// FNV-1a 64 over the little-endian bytes of the assigned sample indices,
// client by client, rendered as 16 lowercase hex digits.
std::string assignment_checksum(const std::vector<std::vector<std::int64_t>>& assignment);

std::string manifest_to_json(const PartitionManifest& manifest);
PartitionManifest manifest_from_json(const std::string& text);
void write_manifest(const std::string& path, const PartitionManifest& manifest);
PartitionManifest read_manifest(const std::string& path);

}  // namespace fedsim
