#include "fairicd/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "fairicd/errors.hpp"

namespace fairicd {

namespace {

void check_mm(std::size_t ak, std::size_t bk, const char* what) {
  if (ak != bk) throw NumericError(std::string("shape mismatch in ") + what);
}

inline void row_times_mat(const double* arow, const Tensor& b, double* out) {
  const std::size_t n = b.cols();
  const std::size_t k = b.rows();
  std::memset(out, 0, n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double v = arow[p];
    if (v == 0.0) continue;
    const double* brow = b.row(p);
    for (std::size_t j = 0; j < n; ++j) out[j] += v * brow[j];
  }
}

}  // namespace

void matmul_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.cols(), b.rows(), "matmul");
  c = Tensor(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) row_times_mat(a.row(i), b, c.row(i));
}

void matmul(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.cols(), b.rows(), "matmul");
  c = Tensor(a.rows(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i)
    row_times_mat(a.row(static_cast<std::size_t>(i)), b,
                  c.row(static_cast<std::size_t>(i)));
}

// A^T B: output row i is column i of A against B; accumulate over A's rows in
// index order so the reduction order is fixed.
void matmul_tn_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.rows(), b.rows(), "matmul_tn");
  c = Tensor(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    double* crow = c.row(i);
    for (std::size_t p = 0; p < a.rows(); ++p) {
      const double v = a(p, i);
      if (v == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += v * brow[j];
    }
  }
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.rows(), b.rows(), "matmul_tn");
  c = Tensor(a.cols(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < m; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* crow = c.row(i);
    for (std::size_t p = 0; p < a.rows(); ++p) {
      const double v = a(p, i);
      if (v == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += v * brow[j];
    }
  }
}

void matmul_nt_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.cols(), b.cols(), "matmul_nt");
  c = Tensor(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) acc += arow[p] * brow[p];
      c(i, j) = acc;
    }
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  check_mm(a.cols(), b.cols(), "matmul_nt");
  c = Tensor(a.rows(), b.rows());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < m; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) acc += arow[p] * brow[p];
      c(i, j) = acc;
    }
  }
}

namespace {

inline void spmm_row(std::size_t i, const std::vector<std::size_t>& offs,
                     const std::vector<std::uint32_t>& cols,
                     const std::vector<double>& w, const Tensor& x, Tensor& y) {
  double* yrow = y.row(i);
  const std::size_t n = x.cols();
  for (std::size_t e = offs[i]; e < offs[i + 1]; ++e) {
    const double v = w[e];
    const double* xrow = x.row(cols[e]);
    for (std::size_t j = 0; j < n; ++j) yrow[j] += v * xrow[j];
  }
}

}  // namespace

void spmm_serial(const std::vector<std::size_t>& row_offsets,
                 const std::vector<std::uint32_t>& col_indices,
                 const std::vector<double>& weights, const Tensor& x, Tensor& y) {
  const std::size_t num_rows = row_offsets.size() - 1;
  y = Tensor(num_rows, x.cols());
  for (std::size_t i = 0; i < num_rows; ++i)
    spmm_row(i, row_offsets, col_indices, weights, x, y);
}

void spmm(const std::vector<std::size_t>& row_offsets,
          const std::vector<std::uint32_t>& col_indices,
          const std::vector<double>& weights, const Tensor& x, Tensor& y) {
  const std::size_t num_rows = row_offsets.size() - 1;
  y = Tensor(num_rows, x.cols());
  const std::int64_t m = static_cast<std::int64_t>(num_rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i)
    spmm_row(static_cast<std::size_t>(i), row_offsets, col_indices, weights, x, y);
}

namespace {

constexpr std::uint32_t kUnused = std::numeric_limits<std::uint32_t>::max();

// Bounded insertion keeping the best k (dist, id) pairs in sorted order.
// k is small (<= a few dozen) so insertion beats a heap here.
struct TopK {
  std::size_t k;
  std::vector<double>& dists;      // slice for this query
  std::vector<std::uint32_t>& ids;
  std::size_t base;
  std::size_t count = 0;

  void offer(double d, std::uint32_t id) {
    if (count == k) {
      const double worst = dists[base + k - 1];
      const std::uint32_t worst_id = ids[base + k - 1];
      if (d > worst || (d == worst && id > worst_id)) return;
    }
    std::size_t pos = count < k ? count : k - 1;
    while (pos > 0) {
      const double pd = dists[base + pos - 1];
      const std::uint32_t pid = ids[base + pos - 1];
      if (pd < d || (pd == d && pid < id)) break;
      dists[base + pos] = pd;
      ids[base + pos] = pid;
      --pos;
    }
    dists[base + pos] = d;
    ids[base + pos] = id;
    if (count < k) ++count;
  }
};

inline double sqdist(const double* a, const double* b,
                     const std::vector<std::size_t>& cols) {
  double acc = 0.0;
  for (std::size_t c : cols) {
    const double d = a[c] - b[c];
    acc += d * d;
  }
  return acc;
}

void knn_query(std::size_t q, const Tensor& x, const std::vector<std::size_t>& cols,
               std::size_t k, KnnResult& out) {
  const std::size_t n = x.rows();
  TopK top{k, out.dists, out.ids, q * k};
  const double* qrow = x.row(q);
  // blocked candidate sweep for locality
  constexpr std::size_t kBlock = 256;
  for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
    const std::size_t b1 = std::min(n, b0 + kBlock);
    for (std::size_t j = b0; j < b1; ++j) {
      if (j == q) continue;
      top.offer(sqdist(qrow, x.row(j), cols), static_cast<std::uint32_t>(j));
    }
  }
}

}  // namespace

KnnResult knn_search_serial(const Tensor& x, const std::vector<std::size_t>& cols,
                            std::size_t k) {
  KnnResult out;
  out.k = k;
  out.ids.assign(x.rows() * k, kUnused);
  out.dists.assign(x.rows() * k, std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < x.rows(); ++q) knn_query(q, x, cols, k, out);
  return out;
}

KnnResult knn_search(const Tensor& x, const std::vector<std::size_t>& cols,
                     std::size_t k) {
  KnnResult out;
  out.k = k;
  out.ids.assign(x.rows() * k, kUnused);
  out.dists.assign(x.rows() * k, std::numeric_limits<double>::infinity());
  const std::int64_t n = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t q = 0; q < n; ++q)
    knn_query(static_cast<std::size_t>(q), x, cols, k, out);
  return out;
}

}  // namespace fairicd
