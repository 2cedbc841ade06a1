#pragma once

#include <cstdint>

// Row-major blocked matrix multiply used by the convolution kernels.
// Every output element accumulates its K products in ascending k order, so
// results do not depend on the blocking parameters.
namespace rednet::blas {

/// C[M,N] (+)= A[M,K] * B[K,N]
template <typename T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate);

/// C[M,N] (+)= A^T * B with A stored as [K,M]
template <typename T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate);

/// C[M,N] (+)= A * B^T with B stored as [N,K]
template <typename T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
             int64_t ldc, bool accumulate);

}  // namespace rednet::blas
