// Parallel kernels against their serial references: results must be bitwise
// identical at any thread count, since each kernel partitions over output
// rows and accumulates serially within a row.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "fairicd/kernels.hpp"
#include "fairicd/rng.hpp"
#include "support.hpp"

using namespace fairicd;
using namespace testsupport;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("matmul variants match serial references bitwise") {
  Rng rng(11);
  for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                         {3, 5, 2},
                         {17, 9, 23},
                         {64, 33, 40}}) {
    Tensor a = random_features(rng, m, k);
    Tensor b = random_features(rng, k, n);
    Tensor c1(m, n), c2(m, n);
    matmul(a, b, c1);
    matmul_serial(a, b, c2);
    CHECK(bitwise_equal(c1, c2));

    Tensor at = random_features(rng, k, m);
    Tensor t1(m, n), t2(m, n);
    matmul_tn(at, b, t1);
    matmul_tn_serial(at, b, t2);
    CHECK(bitwise_equal(t1, t2));

    Tensor bt = random_features(rng, n, k);
    Tensor u1(m, n), u2(m, n);
    matmul_nt(a, bt, u1);
    matmul_nt_serial(a, bt, u2);
    CHECK(bitwise_equal(u1, u2));
  }
}

TEST_CASE("matmul against a plain triple-loop oracle") {
  Rng rng(12);
  Tensor a = random_features(rng, 7, 4);
  Tensor b = random_features(rng, 4, 5);
  Tensor c(7, 5);
  matmul(a, b, c);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < 4; ++l) acc += a(i, l) * b(l, j);
      CHECK(c(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("spmm matches serial reference bitwise, including empty rows") {
  Rng rng(13);
  const std::size_t n = 60, d = 9;
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 7 != 0) {  // every 7th row left empty
      const std::size_t deg = 1 + rng.below(6);
      for (std::size_t e = 0; e < deg; ++e) {
        cols.push_back(static_cast<std::uint32_t>(rng.below(n)));
        weights.push_back(rng.normal());
      }
    }
    offsets[i + 1] = cols.size();
  }
  Tensor x = random_features(rng, n, d);
  Tensor y1(n, d), y2(n, d);
  spmm(offsets, cols, weights, x, y1);
  spmm_serial(offsets, cols, weights, x, y2);
  CHECK(bitwise_equal(y1, y2));
  for (std::size_t j = 0; j < d; ++j) CHECK(y1(0, j) == 0.0);  // empty row
}

TEST_CASE("knn matches serial reference and the exhaustive oracle") {
  Rng rng(14);
  const std::size_t n = 80, d = 6;
  Tensor x = random_features(rng, n, d);
  std::vector<std::size_t> cols = {0, 1, 2, 3, 4, 5};
  for (std::size_t k : {1ul, 3ul, 7ul}) {
    KnnResult par = knn_search(x, cols, k);
    KnnResult ser = knn_search_serial(x, cols, k);
    REQUIRE(par.ids == ser.ids);
    REQUIRE(par.dists == ser.dists);

    for (std::size_t q = 0; q < n; ++q) {
      std::vector<std::pair<double, std::uint32_t>> all;
      for (std::size_t u = 0; u < n; ++u) {
        if (u == q) continue;
        double dist = 0.0;
        for (std::size_t c : cols) {
          const double diff = x(q, c) - x(u, c);
          dist += diff * diff;
        }
        all.emplace_back(dist, static_cast<std::uint32_t>(u));
      }
      std::sort(all.begin(), all.end());
      for (std::size_t slot = 0; slot < k; ++slot)
        CHECK(par.ids[q * k + slot] == all[slot].second);
    }
  }
}

TEST_CASE("knn breaks exact-duplicate ties by smaller id") {
  Tensor x(4, 2);
  x(0, 0) = 0.0; x(1, 0) = 1.0; x(2, 0) = 1.0; x(3, 0) = 1.0;  // 1,2,3 coincide
  std::vector<std::size_t> cols = {0, 1};
  KnnResult r = knn_search(x, cols, 3);
  CHECK(r.ids[0 * 3 + 0] == 1);
  CHECK(r.ids[0 * 3 + 1] == 2);
  CHECK(r.ids[0 * 3 + 2] == 3);
  // query 2: distance-0 peers 1 and 3; smaller id first
  CHECK(r.ids[2 * 3 + 0] == 1);
  CHECK(r.ids[2 * 3 + 1] == 3);
}

TEST_CASE("knn with k exceeding candidate count marks unused slots") {
  Tensor x(2, 1);
  x(1, 0) = 1.0;
  KnnResult r = knn_search(x, {0}, 5);
  CHECK(r.ids[0] == 1);
  for (std::size_t slot = 1; slot < 5; ++slot)
    CHECK(r.ids[slot] == UINT32_MAX);
}
