#pragma once

#include <algorithm>
#include <cstddef>

namespace pcglab::kernels {

// Global degree of parallelism for the compute kernels. 1 selects the serial
// reference path; the default is the machine core count. Results never depend
// on the thread count. matmul_nn accumulates in the serial per-element order
// (bit-identical to the reference); matmul_nt/matmul_tn reorder their
// reductions for speed and agree with the reference within 1e-5 relative.
void set_threads(int n);
int threads();

namespace serial {

// C[M x N] = A[M x K] * B[K x N], row-major.
template <typename T>
void matmul_nn(T* C, const T* A, const T* B, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<size_t>(i) * K;
        T* c = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) c[j] = T(0);
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            const T* b = B + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C[M x N] = A[M x K] * B[N x K]^T (dot products of rows).
template <typename T>
void matmul_nt(T* C, const T* A, const T* B, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<size_t>(i) * K;
        T* c = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const T* b = B + static_cast<size_t>(j) * K;
            T acc = T(0);
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

// C[M x N] = A[K x M]^T * B[K x N] (weight gradients: X^T * dY).
template <typename T>
void matmul_tn(T* C, const T* A, const T* B, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        T* c = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) c[j] = T(0);
        for (int k = 0; k < K; ++k) {
            const T av = A[static_cast<size_t>(k) * M + i];
            const T* b = B + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

} // namespace serial

namespace par {

template <typename T>
void matmul_nn(T* C, const T* A, const T* B, int M, int K, int N);
template <typename T>
void matmul_nt(T* C, const T* A, const T* B, int M, int K, int N);
template <typename T>
void matmul_tn(T* C, const T* A, const T* B, int M, int K, int N);

// float paths use register-tiled micro-kernels
template <>
void matmul_nn<float>(float* C, const float* A, const float* B, int M, int K, int N);
template <>
void matmul_nt<float>(float* C, const float* A, const float* B, int M, int K, int N);
template <>
void matmul_tn<float>(float* C, const float* A, const float* B, int M, int K, int N);

} // namespace par

// D[cols x rows] = S[rows x cols]^T, blocked. Lets the backward input-gradient
// products run through matmul_nn (weight matrices are small; the transpose
// cost is noise next to the product).
template <typename T>
void transpose(T* D, const T* S, int rows, int cols) {
    constexpr int TB = 32;
    for (int i0 = 0; i0 < rows; i0 += TB)
        for (int j0 = 0; j0 < cols; j0 += TB) {
            const int i1 = std::min(i0 + TB, rows);
            const int j1 = std::min(j0 + TB, cols);
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j)
                    D[static_cast<size_t>(j) * rows + i] = S[static_cast<size_t>(i) * cols + j];
        }
}

// Dispatchers: serial path when threads() == 1.
template <typename T>
void matmul_nn(T* C, const T* A, const T* B, int M, int K, int N) {
    if (threads() <= 1) serial::matmul_nn(C, A, B, M, K, N);
    else par::matmul_nn(C, A, B, M, K, N);
}
template <typename T>
void matmul_nt(T* C, const T* A, const T* B, int M, int K, int N) {
    if (threads() <= 1) serial::matmul_nt(C, A, B, M, K, N);
    else par::matmul_nt(C, A, B, M, K, N);
}
template <typename T>
void matmul_tn(T* C, const T* A, const T* B, int M, int K, int N) {
    if (threads() <= 1) serial::matmul_tn(C, A, B, M, K, N);
    else par::matmul_tn(C, A, B, M, K, N);
}

// Many independent equal-shape products (attention heads): one parallel loop
// over (batch, row block) so small per-head matrices still use every core.
// Strides are in elements between consecutive batch items.
template <typename T>
void batched_matmul_nn(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N);
template <typename T>
void batched_matmul_nt(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N);
template <typename T>
void batched_matmul_tn(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N);

} // namespace pcglab::kernels
