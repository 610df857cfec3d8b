#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fairicd/tensor.hpp"

namespace fairicd {

// Data-parallel kernels. Each parallel kernel partitions work over independent
// output rows and accumulates serially within a row, so results are bitwise
// identical to the *_serial reference regardless of thread count. The serial
// versions are kept for tests and the kernel benchmark.

// C = A * B
void matmul(const Tensor& a, const Tensor& b, Tensor& c);
void matmul_serial(const Tensor& a, const Tensor& b, Tensor& c);

// C = A^T * B
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c);
void matmul_tn_serial(const Tensor& a, const Tensor& b, Tensor& c);

// C = A * B^T
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c);
void matmul_nt_serial(const Tensor& a, const Tensor& b, Tensor& c);

// Y = A * X with A in CSR form (row_offsets/col_indices/weights).
void spmm(const std::vector<std::size_t>& row_offsets,
          const std::vector<std::uint32_t>& col_indices,
          const std::vector<double>& weights, const Tensor& x, Tensor& y);
void spmm_serial(const std::vector<std::size_t>& row_offsets,
                 const std::vector<std::uint32_t>& col_indices,
                 const std::vector<double>& weights, const Tensor& x, Tensor& y);

// For each query row of x: the k candidates with smallest squared Euclidean
// distance over the given columns, ordered by (distance, id) lexicographic
// order, self excluded. Distances are accumulated in ascending column order so
// ties are reproducible against a brute-force oracle.
struct KnnResult {
  std::size_t k = 0;
  // row-major [num_queries x k]; id = UINT32_MAX marks an unused slot
  std::vector<std::uint32_t> ids;
  std::vector<double> dists;
};

KnnResult knn_search(const Tensor& x, const std::vector<std::size_t>& cols,
                     std::size_t k);
KnnResult knn_search_serial(const Tensor& x, const std::vector<std::size_t>& cols,
                            std::size_t k);

}  // namespace fairicd
