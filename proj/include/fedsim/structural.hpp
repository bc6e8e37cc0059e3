#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

// Per-class knowledge vectors live in logit space (length C), so both local
// and global groups are C x C matrices with row j for class j.

struct LocalSk {
  int client_id = 0;
  Matrix per_class;              // C x C; row j valid iff present[j]
  std::vector<bool> present;     // length C
  std::vector<std::int64_t> counts;  // N_k^j

  Index class_count() const { return per_class.rows(); }
};

struct GlobalSk {
  std::int64_t round = -1;
  Matrix per_class;              // C x C
  std::vector<std::int64_t> contributors;  // possessing clients per class

  Index class_count() const { return per_class.rows(); }

  static GlobalSk zeros(Index classes);
};

// 0/1 neighbor matrix over the possessing clients of one class. Row k selects
// k itself plus its M nearest peers by Euclidean distance.
struct Adjacency {
  std::vector<int> clients;  // ids of possessing clients, ascending
  Matrix grid;               // square 0/1, diagonal all ones

  bool empty() const { return clients.empty(); }
};

// Class-wise mean of logits passed through x * sigmoid(x); classes with no
// samples are flagged absent.
LocalSk compute_local_sk(const ModelParams& params, const ClientDataset& dataset);

// Neighbor selection per row: the M smallest distances among the *other*
// possessing clients, ties broken toward the lower client index. With fewer
// than M others, all of them are selected.
Adjacency build_adjacency(const std::vector<LocalSk>& sks, int class_idx, int neighbors);

// Two-stage merge: per-row neighbor average (divided by the row's actual
// selected count), then the mean over possessing clients. Classes nobody
// holds inherit prev's vector bitwise.
GlobalSk merge_global_sk(const std::vector<LocalSk>& sks, int neighbors,
                         const GlobalSk& prev, std::int64_t round);

// Sum over present classes of || c_k^j - c~^j ||_2.
double discrepancy(const LocalSk& local, const GlobalSk& global);

// Population variance (divisor C) of the entries of class j's global vector.
double sk_variance(const GlobalSk& global, int class_idx);

// Checkpoint block: counts as 64-bit LE words, vectors as flat LE doubles.
void save_global_sk(std::ostream& out, const GlobalSk& sk);
GlobalSk load_global_sk(std::istream& in);

}  // namespace fedsim
