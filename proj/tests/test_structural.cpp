#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fedsim/structural.hpp"
#include "test_support.hpp"

using namespace fedsim;
using namespace fedsim::testsupport;

namespace {

// One-class knowledge holder with a scalar vector, for the hand examples.
LocalSk scalar_sk(int client_id, double value) {
  LocalSk sk;
  sk.client_id = client_id;
  sk.per_class = Matrix::Constant(1, 1, value);
  sk.present = {true};
  sk.counts = {1};
  return sk;
}

LocalSk random_local_sk(Rng& rng, int client_id, Index classes) {
  LocalSk sk;
  sk.client_id = client_id;
  sk.per_class = random_sk(rng, classes);
  sk.present.assign(static_cast<std::size_t>(classes), true);
  sk.counts.assign(static_cast<std::size_t>(classes), 1);
  return sk;
}

ClientDataset random_dataset(Rng& rng, int n, Index input, int classes) {
  ClientDataset d;
  d.client_id = 0;
  d.per_class_counts.assign(static_cast<std::size_t>(classes), 0);
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.features = Vector::NullaryExpr(input, [&](Index) { return rng.normal(); });
    s.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    ++d.per_class_counts[static_cast<std::size_t>(s.label)];
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) {
    Sample s;
    s.features = Vector::Zero(input);
    s.label = 0;
    d.per_class_counts[0] = 1;
    d.samples.push_back(std::move(s));
  }
  return d;
}

ModelParams identity_params() {
  ModelParams p;
  p.w1 = Matrix::Identity(2, 2);
  p.b1 = Vector::Zero(2);
  p.w2 = Matrix::Identity(2, 2);
  p.b2 = Vector::Zero(2);
  return p;
}

}  // namespace

TEST_CASE("local knowledge of zero logits is the zero vector") {
  ModelParams p;
  p.w1 = Matrix::Zero(2, 2);
  p.b1 = Vector::Zero(2);
  p.w2 = Matrix::Zero(2, 2);
  p.b2 = Vector::Zero(2);
  ClientDataset d;
  d.client_id = 3;
  Sample s;
  s.features = Vector::Ones(2);
  s.label = 1;
  d.samples = {s};
  d.per_class_counts = {0, 1};
  auto sk = compute_local_sk(p, d);
  CHECK_FALSE(sk.present[0]);
  CHECK(sk.present[1]);
  CHECK(sk.per_class.row(1).isZero(0.0));
}

TEST_CASE("local knowledge hand value from two samples of one class") {
  auto p = identity_params();
  ClientDataset d;
  d.client_id = 0;
  Sample a, b;
  a.features = Vector(2);
  a.features << 1, 0;
  a.label = 0;
  b.features = Vector(2);
  b.features << 3, 0;
  b.label = 0;
  d.samples = {a, b};
  d.per_class_counts = {2, 0};
  auto sk = compute_local_sk(p, d);
  // mean logits [2,0], then x*sigmoid(x) entrywise
  CHECK(sk.per_class(0, 0) ==
        doctest::Approx(1.7615941559557646).epsilon(1e-12));
  CHECK(sk.per_class(0, 1) == 0.0);
  CHECK(sk.counts[0] == 2);
  CHECK_FALSE(sk.present[1]);
}

TEST_CASE("local knowledge entries stay above the transform's minimum") {
  Rng rng(11);
  const double silu_min = -0.278464542761074;
  for (int trial = 0; trial < 100; ++trial) {
    const Index input = 3 + static_cast<Index>(rng.below(3));
    const int classes = 2 + static_cast<int>(rng.below(4));
    auto p = random_params(rng, input, 4, classes, 1.5);
    auto d = random_dataset(rng, 1 + static_cast<int>(rng.below(12)), input,
                            classes);
    auto sk = compute_local_sk(p, d);
    for (Index j = 0; j < sk.class_count(); ++j) {
      if (!sk.present[static_cast<std::size_t>(j)]) continue;
      CHECK(sk.per_class.row(j).minCoeff() >= silu_min - 1e-6);
    }
  }
}

TEST_CASE("neighbor matrix with zero neighbors is the identity") {
  std::vector<LocalSk> sks = {scalar_sk(0, 0.3), scalar_sk(1, 0.9),
                              scalar_sk(2, 0.1)};
  auto adj = build_adjacency(sks, 0, 0);
  CHECK(adj.clients == std::vector<int>{0, 1, 2});
  CHECK(adj.grid == Matrix::Identity(3, 3));
}

TEST_CASE("neighbor matrix hand example at one neighbor") {
  std::vector<LocalSk> sks = {scalar_sk(0, 0.0), scalar_sk(1, 0.1),
                              scalar_sk(2, 1.0)};
  auto adj = build_adjacency(sks, 0, 1);
  Matrix expect(3, 3);
  expect << 1, 1, 0, 1, 1, 0, 0, 1, 1;
  CHECK(adj.grid == expect);
}

TEST_CASE("equidistant neighbors resolve toward the lower client index") {
  std::vector<LocalSk> sks = {scalar_sk(0, 0.0), scalar_sk(1, 0.5),
                              scalar_sk(2, -0.5)};
  auto adj = build_adjacency(sks, 0, 1);
  CHECK(adj.grid(0, 1) == 1.0);
  CHECK(adj.grid(0, 2) == 0.0);
}

TEST_CASE("neighbor matrix rows sum to the selection size with unit diagonal") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int m = static_cast<int>(rng.below(5));
    std::vector<LocalSk> sks;
    for (int k = 0; k < n; ++k) sks.push_back(random_local_sk(rng, k, 3));
    auto adj = build_adjacency(sks, 1, m);
    const auto expected = std::min<double>(m + 1, n);
    for (Index a = 0; a < adj.grid.rows(); ++a) {
      CHECK(adj.grid(a, a) == 1.0);
      CHECK(adj.grid.row(a).sum() == expected);
      for (Index b = 0; b < adj.grid.cols(); ++b) {
        CHECK((adj.grid(a, b) == 0.0 || adj.grid(a, b) == 1.0));
      }
    }
  }
}

TEST_CASE("merging identical knowledge returns it unchanged") {
  Rng rng(17);
  Matrix v = random_sk(rng, 3);
  std::vector<LocalSk> sks;
  for (int k = 0; k < 4; ++k) {
    LocalSk sk = random_local_sk(rng, k, 3);
    sk.per_class = v;
    sks.push_back(std::move(sk));
  }
  auto prev = GlobalSk::zeros(3);
  auto merged = merge_global_sk(sks, 1, prev, 0);
  CHECK((merged.per_class - v).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(merged.contributors == std::vector<std::int64_t>{4, 4, 4});
  CHECK(merged.round == 0);
}

TEST_CASE("merge hand example over three scalar holders") {
  std::vector<LocalSk> sks = {scalar_sk(0, 0.0), scalar_sk(1, 0.1),
                              scalar_sk(2, 1.0)};
  auto prev = GlobalSk::zeros(1);
  auto merged = merge_global_sk(sks, 1, prev, 5);
  CHECK(merged.per_class(0, 0) ==
        doctest::Approx(0.21666666666666667).epsilon(1e-12));
  CHECK(merged.contributors[0] == 3);
}

TEST_CASE("a class nobody holds inherits the previous vector bitwise") {
  Rng rng(19);
  GlobalSk prev = GlobalSk::zeros(2);
  prev.per_class = random_sk(rng, 2);
  LocalSk only0 = random_local_sk(rng, 0, 2);
  only0.present[1] = false;
  auto merged = merge_global_sk({only0}, 1, prev, 3);
  CHECK(merged.per_class.row(1) == prev.per_class.row(1));
  CHECK(merged.contributors[1] == 0);
  CHECK(merged.contributors[0] == 1);
}

TEST_CASE("a class missing for several rounds carries one vector through") {
  Rng rng(23);
  LocalSk with1 = random_local_sk(rng, 0, 2);
  auto carried = merge_global_sk({with1}, 1, GlobalSk::zeros(2), 0);
  const Vector frozen = carried.per_class.row(1);
  LocalSk without1 = random_local_sk(rng, 0, 2);
  without1.present[1] = false;
  for (std::int64_t r = 1; r <= 5; ++r) {
    without1.per_class = random_sk(rng, 2);  // class-0 vector keeps changing
    carried = merge_global_sk({without1}, 1, carried, r);
    CHECK(Vector(carried.per_class.row(1)) == frozen);
  }
}

TEST_CASE("merge ignores the ordering of the local knowledge list") {
  Rng rng(29);
  std::vector<LocalSk> sks;
  for (int k = 0; k < 5; ++k) sks.push_back(random_local_sk(rng, k, 4));
  auto prev = GlobalSk::zeros(4);
  auto a = merge_global_sk(sks, 2, prev, 1);
  std::vector<LocalSk> shuffled = {sks[3], sks[0], sks[4], sks[2], sks[1]};
  auto b = merge_global_sk(shuffled, 2, prev, 1);
  CHECK(a.per_class == b.per_class);
}

TEST_CASE("discrepancy hand values") {
  LocalSk local;
  local.client_id = 0;
  local.per_class = Matrix(2, 2);
  local.per_class << 1, 0, 0, 1;
  local.present = {true, true};
  local.counts = {1, 1};
  GlobalSk global = GlobalSk::zeros(2);
  global.per_class << 0, 0, 0, 1;
  CHECK(discrepancy(local, global) == doctest::Approx(1.0).epsilon(1e-15));

  GlobalSk same = global;
  same.per_class = local.per_class;
  CHECK(discrepancy(local, same) == 0.0);
}

TEST_CASE("discrepancy scales linearly with the vectors") {
  Rng rng(31);
  LocalSk local = random_local_sk(rng, 0, 3);
  GlobalSk global = GlobalSk::zeros(3);
  global.per_class = random_sk(rng, 3);
  const double base = discrepancy(local, global);
  const double t = 3.7;
  LocalSk scaled_local = local;
  scaled_local.per_class *= t;
  GlobalSk scaled_global = global;
  scaled_global.per_class *= t;
  CHECK(discrepancy(scaled_local, scaled_global) ==
        doctest::Approx(t * base).epsilon(1e-12));
}

TEST_CASE("knowledge variance hand values and shift invariance") {
  GlobalSk sk = GlobalSk::zeros(2);
  sk.per_class << 0, 2, 5, 5;
  CHECK(sk_variance(sk, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sk_variance(sk, 1) == 0.0);

  Rng rng(37);
  GlobalSk g = GlobalSk::zeros(4);
  g.per_class = random_sk(rng, 4);
  const double before = sk_variance(g, 2);
  g.per_class.row(2).array() += 17.25;
  CHECK(sk_variance(g, 2) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("global knowledge serialization round-trips bitwise") {
  Rng rng(41);
  GlobalSk sk = GlobalSk::zeros(3);
  sk.round = 12;
  sk.per_class = random_sk(rng, 3);
  sk.contributors = {2, 0, 5};
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_global_sk(buf, sk);
  auto back = load_global_sk(buf);
  CHECK(back.round == 12);
  CHECK(back.per_class == sk.per_class);
  CHECK(back.contributors == sk.contributors);
}
