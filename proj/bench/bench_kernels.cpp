// Timing comparison of the OpenMP kernels against their serial references:
// dense matmul, CSR spmm, and exact kNN. Also asserts bitwise agreement, since
// the parallel kernels are written to be reduction-order identical.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fairicd/graph.hpp"
#include "fairicd/kernels.hpp"
#include "fairicd/rng.hpp"
#include "fairicd/tensor.hpp"

using namespace fairicd;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.raw().data(), b.raw().data(), a.size() * sizeof(double)) == 0;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t.raw()[i] = rng.normal();
  return t;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif

  Rng rng(42);

  {
    const std::size_t n = 512, k = 256, m = 512;
    const Tensor a = random_tensor(n, k, rng);
    const Tensor b = random_tensor(k, m, rng);
    Tensor out_p(n, m), out_s(n, m);
    const double tp = time_ms([&] { matmul(a, b, out_p); }, 5);
    const double ts = time_ms([&] { matmul_serial(a, b, out_s); }, 5);
    std::printf("matmul   %zux%zux%zu      parallel %8.2f ms   serial %8.2f ms   speedup %.2fx   %s\n",
                n, k, m, tp, ts, ts / tp, bitwise_equal(out_p, out_s) ? "bitwise-equal" : "MISMATCH");
  }

  {
    // Random sparse graph, ~20 neighbors per row.
    const std::size_t n = 20000, deg = 20, cols = 64;
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(n * deg);
    for (std::size_t i = 0; i < n * deg; ++i)
      edges.emplace_back(static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)));
    const Graph g = Graph::from_edges(n, std::move(edges));
    const Tensor x = random_tensor(n, cols, rng);
    Tensor out_p(n, cols), out_s(n, cols);
    const double tp = time_ms(
        [&] { spmm(g.row_offsets, g.col_indices, g.edge_weights, x, out_p); }, 5);
    const double ts = time_ms(
        [&] { spmm_serial(g.row_offsets, g.col_indices, g.edge_weights, x, out_s); }, 5);
    std::printf("spmm     %zu rows x %zu   parallel %8.2f ms   serial %8.2f ms   speedup %.2fx   %s\n",
                n, cols, tp, ts, ts / tp, bitwise_equal(out_p, out_s) ? "bitwise-equal" : "MISMATCH");
  }

  {
    const std::size_t n = 4000, d = 32, k = 10;
    const Tensor x = random_tensor(n, d, rng);
    std::vector<std::size_t> cols(d);
    for (std::size_t j = 0; j < d; ++j) cols[j] = j;
    KnnResult rp, rs;
    const double tp = time_ms([&] { rp = knn_search(x, cols, k); }, 3);
    const double ts = time_ms([&] { rs = knn_search_serial(x, cols, k); }, 3);
    const bool same = rp.ids == rs.ids && rp.dists == rs.dists;
    std::printf("knn      n=%zu d=%zu k=%zu  parallel %8.2f ms   serial %8.2f ms   speedup %.2fx   %s\n",
                n, d, k, tp, ts, ts / tp, same ? "bitwise-equal" : "MISMATCH");
  }

  return 0;
}
