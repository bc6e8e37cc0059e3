#include "fedsim/structural.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace fedsim {

GlobalSk GlobalSk::zeros(Index classes) {
  GlobalSk sk;
  sk.round = -1;
  sk.per_class = Matrix::Zero(classes, classes);
  sk.contributors.assign(static_cast<std::size_t>(classes), 0);
  return sk;
}

LocalSk compute_local_sk(const ModelParams& params, const ClientDataset& dataset) {
  require(!dataset.samples.empty(), "compute_local_sk: empty dataset");
  const Index classes = params.class_count();
  LocalSk sk;
  sk.client_id = dataset.client_id;
  sk.per_class = Matrix::Zero(classes, classes);
  sk.present.assign(static_cast<std::size_t>(classes), false);
  sk.counts.assign(static_cast<std::size_t>(classes), 0);

  Matrix logits = logits_batch(params, dataset.feature_matrix());
  for (Index i = 0; i < logits.rows(); ++i) {
    const int y = dataset.samples[static_cast<std::size_t>(i)].label;
    sk.per_class.row(y) += logits.row(i);
    ++sk.counts[static_cast<std::size_t>(y)];
  }
  for (Index j = 0; j < classes; ++j) {
    const auto n = sk.counts[static_cast<std::size_t>(j)];
    if (n == 0) continue;
    sk.present[static_cast<std::size_t>(j)] = true;
    Eigen::ArrayXd m = sk.per_class.row(j).array() / static_cast<double>(n);
    sk.per_class.row(j) = (m * (1.0 / (1.0 + (-m).exp()))).matrix();
  }
  require_finite(sk.per_class, "compute_local_sk");
  return sk;
}

Adjacency build_adjacency(const std::vector<LocalSk>& sks, int class_idx, int neighbors) {
  require(neighbors >= 0, "build_adjacency: neighbors must be >= 0");
  Adjacency adj;
  for (const auto& sk : sks) {
    if (sk.present[static_cast<std::size_t>(class_idx)]) {
      adj.clients.push_back(sk.client_id);
    }
  }
  std::sort(adj.clients.begin(), adj.clients.end());
  const auto n = static_cast<Index>(adj.clients.size());
  if (n == 0) return adj;  // empty-matrix signal, caller falls back

  // Row k of the possessing clients' vectors for this class.
  std::vector<const LocalSk*> by_id(adj.clients.size());
  for (const auto& sk : sks) {
    auto it = std::lower_bound(adj.clients.begin(), adj.clients.end(), sk.client_id);
    if (it != adj.clients.end() && *it == sk.client_id &&
        sk.present[static_cast<std::size_t>(class_idx)]) {
      by_id[static_cast<std::size_t>(it - adj.clients.begin())] = &sk;
    }
  }

  adj.grid = Matrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    adj.grid(a, a) = 1.0;
    std::vector<std::pair<double, Index>> dist;
    for (Index b = 0; b < n; ++b) {
      if (b == a) continue;
      double d = (by_id[static_cast<std::size_t>(a)]->per_class.row(class_idx) -
                  by_id[static_cast<std::size_t>(b)]->per_class.row(class_idx))
                     .norm();
      dist.emplace_back(d, b);
    }
    // Ties resolved toward the lower client index (clients are ascending).
    std::sort(dist.begin(), dist.end());
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(neighbors), dist.size());
    for (std::size_t t = 0; t < take; ++t) adj.grid(a, dist[t].second) = 1.0;
  }
  return adj;
}

GlobalSk merge_global_sk(const std::vector<LocalSk>& sks, int neighbors,
                         const GlobalSk& prev, std::int64_t round) {
  require(!sks.empty(), "merge_global_sk: no local knowledge");
  const Index classes = sks.front().class_count();
  require(prev.class_count() == classes, "merge_global_sk: prev class count mismatch");

  GlobalSk out;
  out.round = round;
  out.per_class = Matrix::Zero(classes, classes);
  out.contributors.assign(static_cast<std::size_t>(classes), 0);

  for (Index j = 0; j < classes; ++j) {
    Adjacency adj = build_adjacency(sks, static_cast<int>(j), neighbors);
    if (adj.empty()) {
      out.per_class.row(j) = prev.per_class.row(j);
      continue;
    }
    const auto n = static_cast<Index>(adj.clients.size());
    // Vectors aligned with adj.clients ordering.
    Matrix vecs(n, classes);
    for (const auto& sk : sks) {
      auto it = std::lower_bound(adj.clients.begin(), adj.clients.end(), sk.client_id);
      if (it != adj.clients.end() && *it == sk.client_id &&
          sk.present[static_cast<std::size_t>(j)]) {
        vecs.row(it - adj.clients.begin()) = sk.per_class.row(j);
      }
    }
    Vector merged_sum = Vector::Zero(classes);
    for (Index a = 0; a < n; ++a) {
      Vector row_sum = Vector::Zero(classes);
      double selected = 0.0;
      for (Index b = 0; b < n; ++b) {
        if (adj.grid(a, b) != 0.0) {
          row_sum += vecs.row(b).transpose();
          selected += 1.0;
        }
      }
      merged_sum += row_sum / selected;
    }
    out.per_class.row(j) = (merged_sum / static_cast<double>(n)).transpose();
    out.contributors[static_cast<std::size_t>(j)] = n;
  }
  require_finite(out.per_class, "merge_global_sk");
  return out;
}

double discrepancy(const LocalSk& local, const GlobalSk& global) {
  require(local.class_count() == global.class_count(),
          "discrepancy: class count mismatch");
  double d = 0.0;
  for (Index j = 0; j < local.class_count(); ++j) {
    if (!local.present[static_cast<std::size_t>(j)]) continue;
    d += (local.per_class.row(j) - global.per_class.row(j)).norm();
  }
  return d;
}

double sk_variance(const GlobalSk& global, int class_idx) {
  const auto row = global.per_class.row(class_idx);
  const double mean = row.mean();
  return (row.array() - mean).square().sum() / static_cast<double>(row.size());
}

static void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

static std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("checkpoint: truncated global knowledge block");
  return v;
}

void save_global_sk(std::ostream& out, const GlobalSk& sk) {
  write_i64(out, sk.class_count());
  write_i64(out, sk.round);
  out.write(reinterpret_cast<const char*>(sk.per_class.data()),
            static_cast<std::streamsize>(sizeof(double) * sk.per_class.size()));
  for (auto c : sk.contributors) write_i64(out, c);
}

GlobalSk load_global_sk(std::istream& in) {
  const auto classes = static_cast<Index>(read_i64(in));
  if (classes <= 0) throw ConfigError("checkpoint: bad class count");
  GlobalSk sk;
  sk.round = read_i64(in);
  sk.per_class.resize(classes, classes);
  in.read(reinterpret_cast<char*>(sk.per_class.data()),
          static_cast<std::streamsize>(sizeof(double) * sk.per_class.size()));
  sk.contributors.resize(static_cast<std::size_t>(classes));
  for (auto& c : sk.contributors) c = read_i64(in);
  if (!in) throw ConfigError("checkpoint: truncated global knowledge block");
  return sk;
}

}  // namespace fedsim
