#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"

#include "fedsim/data.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

TEST_CASE("balanced profile gives every class the head count") {
  auto counts = longtail_profile(6, 250, 1.0);
  CHECK(counts == std::vector<std::int64_t>(6, 250));
}

TEST_CASE("long-tail profile frozen example") {
  auto counts = longtail_profile(10, 100, 100.0);
  // round(100 * 100^(-j/9)) per class, floored at one sample
  std::vector<std::int64_t> expect = {100, 60, 36, 22, 13, 8, 5, 3, 2, 1};
  CHECK(counts == expect);
  CHECK(counts[3] == 22);
  CHECK(counts[9] == 1);
}

TEST_CASE("profile counts never increase along the tail") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(11));
    const auto n_max = static_cast<std::int64_t>(1 + rng.below(1000));
    const double rho = 1.0 + 99.0 * rng.uniform();
    auto counts = longtail_profile(classes, n_max, rho);
    CHECK(counts.front() == n_max);
    for (std::size_t j = 1; j < counts.size(); ++j) {
      CHECK(counts[j] <= counts[j - 1]);
      CHECK(counts[j] >= 1);
    }
  }
}

TEST_CASE("degenerate profile arguments are rejected") {
  CHECK_THROWS_AS(longtail_profile(1, 100, 2.0), ContractError);
  CHECK_THROWS_AS(longtail_profile(10, 100, 0.5), ContractError);
  CHECK_THROWS_AS(longtail_profile(10, 0, 2.0), ContractError);
}

TEST_CASE("class centers sit on the separation sphere") {
  Rng rng(7);
  Matrix centers = class_centers(5, 16, 3.5, rng);
  REQUIRE(centers.rows() == 5);
  REQUIRE(centers.cols() == 16);
  for (Index j = 0; j < centers.rows(); ++j) {
    CHECK(centers.row(j).norm() == doctest::Approx(3.5).epsilon(1e-12));
  }
  for (Index a = 0; a < centers.rows(); ++a) {
    for (Index b = a + 1; b < centers.rows(); ++b) {
      CHECK((centers.row(a) - centers.row(b)).norm() > 1e-6);
    }
  }
}

TEST_CASE("class centers are a pure function of the stream") {
  Rng a(99), b(99);
  CHECK(class_centers(4, 8, 2.0, a) == class_centers(4, 8, 2.0, b));
}

TEST_CASE("blob samples follow the profile and stay near their centers") {
  Rng rng(11);
  Matrix centers = class_centers(3, 6, 4.0, rng);
  std::vector<std::int64_t> profile = {5, 3, 2};
  auto samples = sample_blobs(centers, profile, 1e-13, rng);
  REQUIRE(samples.size() == 10);
  std::vector<std::int64_t> seen(3, 0);
  int prev_label = 0;
  for (const auto& s : samples) {
    CHECK(s.label >= prev_label);  // grouped in ascending label order
    prev_label = s.label;
    ++seen[static_cast<std::size_t>(s.label)];
    CHECK((s.features.transpose() - centers.row(s.label)).norm() < 1e-9);
  }
  CHECK(seen == profile);
}

TEST_CASE("blob sampling is deterministic for a fixed stream") {
  Rng a(42), b(42);
  Matrix centers = Matrix::Identity(2, 4);
  std::vector<std::int64_t> profile = {3, 3};
  auto s1 = sample_blobs(centers, profile, 0.7, a);
  auto s2 = sample_blobs(centers, profile, 0.7, b);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].features == s2[i].features);
    CHECK(s1[i].label == s2[i].label);
  }
}

namespace {

// Features encode the sample index so conservation can be checked exactly.
std::vector<Sample> tagged_samples(int n, int classes, Rng& rng) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.features = Vector::Constant(2, static_cast<double>(i));
    s.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("single-client partition receives the whole dataset in order") {
  Rng rng(3);
  auto samples = tagged_samples(25, 4, rng);
  auto part = dirichlet_partition(samples, 4, 1, 0.3, rng);
  REQUIRE(part.clients.size() == 1);
  CHECK(part.clients[0].size() == 25);
  CHECK(part.manifest.clients == 1);
  CHECK(part.manifest.classes == 4);
  std::int64_t total = 0;
  for (auto c : part.manifest.counts[0]) total += c;
  CHECK(total == 25);
}

TEST_CASE("partition places every sample exactly once") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(5));
    const int clients = 1 + static_cast<int>(rng.below(8));
    const int n = 10 + static_cast<int>(rng.below(200));
    const double alpha = 0.05 + 5.0 * rng.uniform();
    auto samples = tagged_samples(n, classes, rng);
    auto part = dirichlet_partition(samples, classes, clients, alpha, rng);

    std::vector<int> tags;
    std::int64_t counted = 0;
    for (const auto& client : part.clients) {
      std::vector<std::int64_t> by_class(static_cast<std::size_t>(classes), 0);
      for (const auto& s : client.samples) {
        tags.push_back(static_cast<int>(s.features(0)));
        ++by_class[static_cast<std::size_t>(s.label)];
      }
      CHECK(by_class == client.per_class_counts);
      for (auto c : by_class) counted += c;
    }
    CHECK(counted == n);
    std::sort(tags.begin(), tags.end());
    bool exact_cover = static_cast<int>(tags.size()) == n;
    for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
      exact_cover = exact_cover && tags[static_cast<std::size_t>(i)] == i;
    }
    CHECK(exact_cover);
  }
}

TEST_CASE("huge concentration parameter splits classes almost evenly") {
  int good_trials = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + static_cast<std::uint64_t>(trial));
    std::vector<Sample> samples;
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 400; ++i) {
        Sample s;
        s.features = Vector::Zero(2);
        s.label = j;
        samples.push_back(std::move(s));
      }
    }
    auto part = dirichlet_partition(samples, 3, 4, 1e6, rng);
    bool ok = true;
    for (const auto& client : part.clients) {
      for (auto c : client.per_class_counts) ok = ok && c >= 95 && c <= 105;
    }
    good_trials += ok ? 1 : 0;
  }
  CHECK(good_trials >= 95);
}

TEST_CASE("checksum is sixteen lowercase hex digits and order-sensitive") {
  std::vector<std::vector<std::int64_t>> a = {{0, 1}, {2}};
  std::vector<std::vector<std::int64_t>> b = {{0, 2}, {1}};
  auto ha = assignment_checksum(a);
  CHECK(ha.size() == 16);
  for (char ch : ha) {
    CHECK((std::isdigit(static_cast<unsigned char>(ch)) ||
           (ch >= 'a' && ch <= 'f')));
  }
  CHECK(ha != assignment_checksum(b));
  CHECK(ha == assignment_checksum(a));
  // FNV-1a with no input is the bare offset basis.
  CHECK(assignment_checksum({}) == "cbf29ce484222325");
}

TEST_CASE("manifest serialization round-trips and uses the agreed keys") {
  PartitionManifest m;
  m.seed = 77;
  m.alpha = 0.2;
  m.rho = 10.0;
  m.clients = 2;
  m.classes = 3;
  m.counts = {{4, 0, 1}, {0, 2, 2}};
  m.checksum = "00ff00ff00ff00ff";

  auto text = manifest_to_json(m);
  CHECK(manifest_from_json(text) == m);

  auto j = nlohmann::json::parse(text);
  for (const char* key : {"seed", "alpha", "rho", "K", "C", "counts", "checksum"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["K"] == 2);
  CHECK(j["C"] == 3);
  CHECK(j["counts"][0][0] == 4);
}
