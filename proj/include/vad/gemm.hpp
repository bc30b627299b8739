#pragma once

#include <cstdint>

namespace vad::detail {

// Row-major single-precision GEMM used by the convolution and dense ops.
// All variants overwrite C. Backed by single-threaded OpenBLAS when built
// with VADET_WITH_OPENBLAS, otherwise a portable loop; either way the
// per-element accumulation order over k is fixed, so results are
// reproducible run to run.

// C[M,N] = A[M,K] * B[K,N]
void gemm_nn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C);
// C[M,N] = A^T[M,K] * B[K,N]   (A stored as [K,M])
void gemm_tn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C);
// C[M,N] = A[M,K] * B^T[K,N]   (B stored as [N,K])
void gemm_nt(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C);

}  // namespace vad::detail
