#include "rednet/gemm.hpp"

#include <algorithm>
#include <vector>

namespace rednet::blas {
namespace {

constexpr int64_t kBlockK = 128;
constexpr int64_t kBlockN = 512;

// A element (i, kk) is a[i * row_stride + kk * col_stride].
template <typename T>
void gemm_kernel(int64_t m, int64_t n, int64_t k, const T* a, int64_t row_stride, int64_t col_stride,
                 const T* b, int64_t ldb, T* c, int64_t ldc, bool accumulate) {
  if (!accumulate) {
    for (int64_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T(0));
  }
  if (k == 0) return;
  for (int64_t jb = 0; jb < n; jb += kBlockN) {
    const int64_t nb = std::min(kBlockN, n - jb);
    for (int64_t kb = 0; kb < k; kb += kBlockK) {
      const int64_t kend = std::min(k, kb + kBlockK);
      int64_t i = 0;
      for (; i + 4 <= m; i += 4) {
        T* __restrict c0 = c + (i + 0) * ldc + jb;
        T* __restrict c1 = c + (i + 1) * ldc + jb;
        T* __restrict c2 = c + (i + 2) * ldc + jb;
        T* __restrict c3 = c + (i + 3) * ldc + jb;
        for (int64_t kk = kb; kk < kend; ++kk) {
          const T a0 = a[(i + 0) * row_stride + kk * col_stride];
          const T a1 = a[(i + 1) * row_stride + kk * col_stride];
          const T a2 = a[(i + 2) * row_stride + kk * col_stride];
          const T a3 = a[(i + 3) * row_stride + kk * col_stride];
          const T* __restrict brow = b + kk * ldb + jb;
          for (int64_t j = 0; j < nb; ++j) {
            const T bv = brow[j];
            c0[j] += a0 * bv;
            c1[j] += a1 * bv;
            c2[j] += a2 * bv;
            c3[j] += a3 * bv;
          }
        }
      }
      for (; i < m; ++i) {
        T* __restrict c0 = c + i * ldc + jb;
        for (int64_t kk = kb; kk < kend; ++kk) {
          const T a0 = a[i * row_stride + kk * col_stride];
          const T* __restrict brow = b + kk * ldb + jb;
          for (int64_t j = 0; j < nb; ++j) c0[j] += a0 * brow[j];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate) {
  gemm_kernel(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

template <typename T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate) {
  gemm_kernel(m, n, k, a, 1, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate) {
  // Pack B^T into [K,N] so the inner loop streams contiguously.
  thread_local std::vector<T> packed;
  packed.resize(static_cast<size_t>(k * n));
  for (int64_t j = 0; j < n; ++j) {
    const T* src = b + j * ldb;
    for (int64_t kk = 0; kk < k; ++kk) packed[kk * n + j] = src[kk];
  }
  gemm_kernel(m, n, k, a, lda, 1, packed.data(), n, c, ldc, accumulate);
}

#define REDNET_INSTANTIATE(T)                                                                       \
  template void gemm_nn<T>(int64_t, int64_t, int64_t, const T*, int64_t, const T*, int64_t, T*,  \
                           int64_t, bool);                                                          \
  template void gemm_tn<T>(int64_t, int64_t, int64_t, const T*, int64_t, const T*, int64_t, T*,  \
                           int64_t, bool);                                                          \
  template void gemm_nt<T>(int64_t, int64_t, int64_t, const T*, int64_t, const T*, int64_t, T*,  \
                           int64_t, bool);

REDNET_INSTANTIATE(float)
REDNET_INSTANTIATE(double)
#undef REDNET_INSTANTIATE

}  // namespace rednet::blas
