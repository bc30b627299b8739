#include "vad/gemm.hpp"

#include <cstring>

#ifdef VADET_USE_OPENBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace vad::detail {

#ifdef VADET_USE_OPENBLAS

namespace {
struct BlasInit {
    BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit g_blas_init;
}  // namespace

void gemm_nn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(M), static_cast<int>(N),
                static_cast<int>(K), 1.0f, A, static_cast<int>(K), B, static_cast<int>(N), 0.0f, C,
                static_cast<int>(N));
}

void gemm_tn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(M), static_cast<int>(N),
                static_cast<int>(K), 1.0f, A, static_cast<int>(M), B, static_cast<int>(N), 0.0f, C,
                static_cast<int>(N));
}

void gemm_nt(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(M), static_cast<int>(N),
                static_cast<int>(K), 1.0f, A, static_cast<int>(K), B, static_cast<int>(K), 0.0f, C,
                static_cast<int>(N));
}

#else

void gemm_nn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    std::memset(C, 0, sizeof(float) * static_cast<std::size_t>(M * N));
    for (std::int64_t i = 0; i < M; ++i) {
        float* c = C + i * N;
        const float* a = A + i * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const float av = a[k];
            const float* b = B + k * N;
            for (std::int64_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_tn(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    std::memset(C, 0, sizeof(float) * static_cast<std::size_t>(M * N));
    for (std::int64_t k = 0; k < K; ++k) {
        const float* a = A + k * M;
        const float* b = B + k * N;
        for (std::int64_t i = 0; i < M; ++i) {
            const float av = a[i];
            float* c = C + i * N;
            for (std::int64_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_nt(std::int64_t M, std::int64_t N, std::int64_t K, const float* A, const float* B, float* C) {
    for (std::int64_t i = 0; i < M; ++i) {
        const float* a = A + i * K;
        float* c = C + i * N;
        for (std::int64_t j = 0; j < N; ++j) {
            const float* b = B + j * K;
            float acc = 0.0f;
            for (std::int64_t k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

#endif

}  // namespace vad::detail
