#include "pcglab/kernels.hpp"

#include <algorithm>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcglab::kernels {

namespace {
int g_threads = []() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}();
} // namespace

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }
int threads() { return g_threads; }

namespace par {

// Generic fallback: four output rows per task so the B panel is reused across
// a row group. Accumulation over k stays sequential per element, bit-identical
// to the serial reference.
template <typename T>
static void rows_nn(T* C, const T* A, const T* B, int i0, int ib, int j0, int jn, int K, int N) {
    for (int r = 0; r < ib; ++r) {
        T* c = C + static_cast<size_t>(i0 + r) * N + j0;
        for (int j = 0; j < jn; ++j) c[j] = T(0);
    }
    for (int k = 0; k < K; ++k) {
        const T* b = B + static_cast<size_t>(k) * N + j0;
        for (int r = 0; r < ib; ++r) {
            const T av = A[static_cast<size_t>(i0 + r) * K + k];
            T* c = C + static_cast<size_t>(i0 + r) * N + j0;
#pragma omp simd
            for (int j = 0; j < jn; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void matmul_nn(T* C, const T* A, const T* B, int M, int K, int N) {
    const int nb = (M + 3) / 4;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int blk = 0; blk < nb; ++blk) {
        const int i0 = blk * 4;
        rows_nn(C, A, B, i0, std::min(4, M - i0), 0, N, K, N);
    }
}

template <typename T>
void matmul_nt(T* C, const T* A, const T* B, int M, int K, int N) {
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<size_t>(i) * K;
        T* c = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const T* b = B + static_cast<size_t>(j) * K;
            T acc = T(0);
#pragma omp simd reduction(+ : acc)
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

template <typename T>
static void rows_tn(T* C, const T* A, const T* B, int i0, int ib, int M, int K, int N) {
    for (int r = 0; r < ib; ++r) {
        T* c = C + static_cast<size_t>(i0 + r) * N;
        for (int j = 0; j < N; ++j) c[j] = T(0);
    }
    for (int k = 0; k < K; ++k) {
        const T* arow = A + static_cast<size_t>(k) * M + i0;
        const T* b = B + static_cast<size_t>(k) * N;
        for (int r = 0; r < ib; ++r) {
            const T av = arow[r];
            T* c = C + static_cast<size_t>(i0 + r) * N;
#pragma omp simd
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void matmul_tn(T* C, const T* A, const T* B, int M, int K, int N) {
    const int nb = (M + 3) / 4;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int blk = 0; blk < nb; ++blk) {
        const int i0 = blk * 4;
        rows_tn(C, A, B, i0, std::min(4, M - i0), M, K, N);
    }
}

// ---------------------------------------------------------------------------
// float fast path: 4x64 register-tiled micro-kernels (GCC vector extension).
// The k-accumulation order per output element matches the scalar loops, so
// nn/tn stay bit-identical to the serial reference; nt reduces in vector lanes
// and is only required to agree within the documented tolerance.

using vf = float __attribute__((vector_size(64))); // 16 lanes
constexpr int kVL = 16;
constexpr int kJT = 4 * kVL; // 64-column register tile

static inline vf load_vf(const float* p) {
    vf v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}
static inline void store_vf(float* p, vf v) { std::memcpy(p, &v, sizeof(v)); }
// scalar-vector mixing broadcasts in one instruction; a lane loop does not
static inline vf splat(float x) { return (vf){} + x; }

// C[i0..i0+3][j0..j0+63] = A rows * B panel, 16 named accumulators so GCC
// keeps them in registers. a_row_stride/a_k_stride describe the A layout
// (row-major for nn, k-major for tn). With accumulate set, C is extended
// rather than overwritten (k-chunked callers).
template <bool accumulate>
static inline void mk_4x64(float* C, const float* a_base, size_t a_row_stride, size_t a_k_stride,
                           const float* B, int j0, int K, int N, int i0) {
    vf a00 = splat(0.0f), a01 = a00, a02 = a00, a03 = a00;
    vf a10 = a00, a11 = a00, a12 = a00, a13 = a00;
    vf a20 = a00, a21 = a00, a22 = a00, a23 = a00;
    vf a30 = a00, a31 = a00, a32 = a00, a33 = a00;
    for (int k = 0; k < K; ++k) {
        const float* b = B + static_cast<size_t>(k) * N + j0;
        const vf b0 = load_vf(b), b1 = load_vf(b + kVL), b2 = load_vf(b + 2 * kVL),
                 b3 = load_vf(b + 3 * kVL);
        const float* ak = a_base + static_cast<size_t>(k) * a_k_stride;
        const vf v0 = splat(ak[0]);
        const vf v1 = splat(ak[a_row_stride]);
        const vf v2 = splat(ak[2 * a_row_stride]);
        const vf v3 = splat(ak[3 * a_row_stride]);
        a00 += v0 * b0; a01 += v0 * b1; a02 += v0 * b2; a03 += v0 * b3;
        a10 += v1 * b0; a11 += v1 * b1; a12 += v1 * b2; a13 += v1 * b3;
        a20 += v2 * b0; a21 += v2 * b1; a22 += v2 * b2; a23 += v2 * b3;
        a30 += v3 * b0; a31 += v3 * b1; a32 += v3 * b2; a33 += v3 * b3;
    }
    float* c0 = C + static_cast<size_t>(i0 + 0) * N + j0;
    float* c1 = C + static_cast<size_t>(i0 + 1) * N + j0;
    float* c2 = C + static_cast<size_t>(i0 + 2) * N + j0;
    float* c3 = C + static_cast<size_t>(i0 + 3) * N + j0;
    if (accumulate) {
        a00 += load_vf(c0); a01 += load_vf(c0 + kVL); a02 += load_vf(c0 + 2 * kVL); a03 += load_vf(c0 + 3 * kVL);
        a10 += load_vf(c1); a11 += load_vf(c1 + kVL); a12 += load_vf(c1 + 2 * kVL); a13 += load_vf(c1 + 3 * kVL);
        a20 += load_vf(c2); a21 += load_vf(c2 + kVL); a22 += load_vf(c2 + 2 * kVL); a23 += load_vf(c2 + 3 * kVL);
        a30 += load_vf(c3); a31 += load_vf(c3 + kVL); a32 += load_vf(c3 + 2 * kVL); a33 += load_vf(c3 + 3 * kVL);
    }
    store_vf(c0, a00); store_vf(c0 + kVL, a01); store_vf(c0 + 2 * kVL, a02); store_vf(c0 + 3 * kVL, a03);
    store_vf(c1, a10); store_vf(c1 + kVL, a11); store_vf(c1 + 2 * kVL, a12); store_vf(c1 + 3 * kVL, a13);
    store_vf(c2, a20); store_vf(c2 + kVL, a21); store_vf(c2 + 2 * kVL, a22); store_vf(c2 + 3 * kVL, a23);
    store_vf(c3, a30); store_vf(c3 + kVL, a31); store_vf(c3 + 2 * kVL, a32); store_vf(c3 + 3 * kVL, a33);
}

template <>
void matmul_nn<float>(float* C, const float* A, const float* B, int M, int K, int N) {
    const int jt = N - N % kJT;
    const int nb = (M + 3) / 4;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int blk = 0; blk < nb; ++blk) {
        const int i0 = blk * 4;
        const int ib = std::min(4, M - i0);
        if (ib == 4) {
            // A row-major: element (i0+r, k) at A[(i0+r)*K + k]
            for (int j0 = 0; j0 < jt; j0 += kJT)
                mk_4x64<false>(C, A + static_cast<size_t>(i0) * K, K, 1, B, j0, K, N, i0);
            if (jt < N) rows_nn(C, A, B, i0, 4, jt, N - jt, K, N);
        } else {
            rows_nn(C, A, B, i0, ib, 0, N, K, N);
        }
    }
}

// k-chunked so the streamed B panel stays cache-resident; per-element sums are
// combined chunk-wise, which reorders the reduction relative to the serial
// reference (agreement within the documented tolerance, deterministic at any
// thread count).
template <>
void matmul_tn<float>(float* C, const float* A, const float* B, int M, int K, int N) {
    const int jt = N - N % kJT;
    const int nb = (M + 3) / 4;
    int kc = static_cast<int>((1u << 20) / (4 * static_cast<unsigned>(N)));
    kc = std::max(256, kc - kc % 64);
    for (int k0 = 0; k0 < K; k0 += kc) {
        const int kb = std::min(kc, K - k0);
        const bool first = k0 == 0;
        const float* Ak = A + static_cast<size_t>(k0) * M;
        const float* Bk = B + static_cast<size_t>(k0) * N;
#pragma omp parallel for schedule(static) num_threads(g_threads)
        for (int blk = 0; blk < nb; ++blk) {
            const int i0 = blk * 4;
            const int ib = std::min(4, M - i0);
            if (ib == 4) {
                // A k-major: element (k, i0+r) at A[k*M + i0 + r]
                for (int j0 = 0; j0 < jt; j0 += kJT) {
                    if (first) mk_4x64<false>(C, Ak + i0, 1, M, Bk, j0, kb, N, i0);
                    else mk_4x64<true>(C, Ak + i0, 1, M, Bk, j0, kb, N, i0);
                }
                if (jt < N) {
                    if (first)
                        for (int r = 0; r < 4; ++r) {
                            float* c = C + static_cast<size_t>(i0 + r) * N + jt;
                            for (int j = 0; j < N - jt; ++j) c[j] = 0.0f;
                        }
                    for (int k = 0; k < kb; ++k) {
                        const float* arow = Ak + static_cast<size_t>(k) * M + i0;
                        const float* b = Bk + static_cast<size_t>(k) * N + jt;
                        for (int r = 0; r < 4; ++r) {
                            const float av = arow[r];
                            float* c = C + static_cast<size_t>(i0 + r) * N + jt;
#pragma omp simd
                            for (int j = 0; j < N - jt; ++j) c[j] += av * b[j];
                        }
                    }
                }
            } else {
                // short row tail: plain accumulation, zeroed on the first chunk
                if (first)
                    for (int r = 0; r < ib; ++r) {
                        float* c = C + static_cast<size_t>(i0 + r) * N;
                        for (int j = 0; j < N; ++j) c[j] = 0.0f;
                    }
                for (int k = 0; k < kb; ++k) {
                    const float* arow = Ak + static_cast<size_t>(k) * M + i0;
                    const float* b = Bk + static_cast<size_t>(k) * N;
                    for (int r = 0; r < ib; ++r) {
                        const float av = arow[r];
                        float* c = C + static_cast<size_t>(i0 + r) * N;
#pragma omp simd
                        for (int j = 0; j < N; ++j) c[j] += av * b[j];
                    }
                }
            }
        }
    }
}

namespace {

inline float hsum(vf v) {
    float s = 0.0f;
    for (int l = 0; l < kVL; ++l) s += v[l];
    return s;
}

// one C row x four B rows, k-vectorized dot products
inline void nt_row4(float* c, const float* a, const float* B, int j, int K, int kt) {
    const float* b0 = B + static_cast<size_t>(j) * K;
    const float* b1 = B + static_cast<size_t>(j + 1) * K;
    const float* b2 = B + static_cast<size_t>(j + 2) * K;
    const float* b3 = B + static_cast<size_t>(j + 3) * K;
    vf s0 = splat(0.0f), s1 = s0, s2 = s0, s3 = s0;
    for (int k = 0; k < kt; k += kVL) {
        const vf av = load_vf(a + k);
        s0 += av * load_vf(b0 + k);
        s1 += av * load_vf(b1 + k);
        s2 += av * load_vf(b2 + k);
        s3 += av * load_vf(b3 + k);
    }
    float t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (int k = kt; k < K; ++k) {
        t0 += a[k] * b0[k];
        t1 += a[k] * b1[k];
        t2 += a[k] * b2[k];
        t3 += a[k] * b3[k];
    }
    c[j] = t0;
    c[j + 1] = t1;
    c[j + 2] = t2;
    c[j + 3] = t3;
}

// four C rows x full column range: 4x4 dot tiles sharing every B load
inline void nt_4rows(float* C, const float* A, const float* B, int i0, int K, int N, int kt) {
    const float* a0 = A + static_cast<size_t>(i0 + 0) * K;
    const float* a1 = A + static_cast<size_t>(i0 + 1) * K;
    const float* a2 = A + static_cast<size_t>(i0 + 2) * K;
    const float* a3 = A + static_cast<size_t>(i0 + 3) * K;
    float* c0 = C + static_cast<size_t>(i0 + 0) * N;
    float* c1 = C + static_cast<size_t>(i0 + 1) * N;
    float* c2 = C + static_cast<size_t>(i0 + 2) * N;
    float* c3 = C + static_cast<size_t>(i0 + 3) * N;
    int j = 0;
    for (; j + 4 <= N; j += 4) {
        const float* b0 = B + static_cast<size_t>(j) * K;
        const float* b1 = B + static_cast<size_t>(j + 1) * K;
        const float* b2 = B + static_cast<size_t>(j + 2) * K;
        const float* b3 = B + static_cast<size_t>(j + 3) * K;
        vf s00 = splat(0.0f), s01 = s00, s02 = s00, s03 = s00;
        vf s10 = s00, s11 = s00, s12 = s00, s13 = s00;
        vf s20 = s00, s21 = s00, s22 = s00, s23 = s00;
        vf s30 = s00, s31 = s00, s32 = s00, s33 = s00;
        for (int k = 0; k < kt; k += kVL) {
            const vf vb0 = load_vf(b0 + k), vb1 = load_vf(b1 + k), vb2 = load_vf(b2 + k),
                     vb3 = load_vf(b3 + k);
            const vf va0 = load_vf(a0 + k);
            s00 += va0 * vb0; s01 += va0 * vb1; s02 += va0 * vb2; s03 += va0 * vb3;
            const vf va1 = load_vf(a1 + k);
            s10 += va1 * vb0; s11 += va1 * vb1; s12 += va1 * vb2; s13 += va1 * vb3;
            const vf va2 = load_vf(a2 + k);
            s20 += va2 * vb0; s21 += va2 * vb1; s22 += va2 * vb2; s23 += va2 * vb3;
            const vf va3 = load_vf(a3 + k);
            s30 += va3 * vb0; s31 += va3 * vb1; s32 += va3 * vb2; s33 += va3 * vb3;
        }
        float t00 = hsum(s00), t01 = hsum(s01), t02 = hsum(s02), t03 = hsum(s03);
        float t10 = hsum(s10), t11 = hsum(s11), t12 = hsum(s12), t13 = hsum(s13);
        float t20 = hsum(s20), t21 = hsum(s21), t22 = hsum(s22), t23 = hsum(s23);
        float t30 = hsum(s30), t31 = hsum(s31), t32 = hsum(s32), t33 = hsum(s33);
        for (int k = kt; k < K; ++k) {
            t00 += a0[k] * b0[k]; t01 += a0[k] * b1[k]; t02 += a0[k] * b2[k]; t03 += a0[k] * b3[k];
            t10 += a1[k] * b0[k]; t11 += a1[k] * b1[k]; t12 += a1[k] * b2[k]; t13 += a1[k] * b3[k];
            t20 += a2[k] * b0[k]; t21 += a2[k] * b1[k]; t22 += a2[k] * b2[k]; t23 += a2[k] * b3[k];
            t30 += a3[k] * b0[k]; t31 += a3[k] * b1[k]; t32 += a3[k] * b2[k]; t33 += a3[k] * b3[k];
        }
        c0[j] = t00; c0[j + 1] = t01; c0[j + 2] = t02; c0[j + 3] = t03;
        c1[j] = t10; c1[j + 1] = t11; c1[j + 2] = t12; c1[j + 3] = t13;
        c2[j] = t20; c2[j + 1] = t21; c2[j + 2] = t22; c2[j + 3] = t23;
        c3[j] = t30; c3[j + 1] = t31; c3[j + 2] = t32; c3[j + 3] = t33;
    }
    for (; j < N; ++j) {
        const float* b = B + static_cast<size_t>(j) * K;
        for (int r = 0; r < 4; ++r) {
            const float* a = A + static_cast<size_t>(i0 + r) * K;
            float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            C[static_cast<size_t>(i0 + r) * N + j] = acc;
        }
    }
}

} // namespace

template <>
void matmul_nt<float>(float* C, const float* A, const float* B, int M, int K, int N) {
    const int kt = K - K % kVL;
    const int nb = (M + 3) / 4;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int blk = 0; blk < nb; ++blk) {
        const int i0 = blk * 4;
        const int ib = std::min(4, M - i0);
        if (ib == 4) {
            nt_4rows(C, A, B, i0, K, N, kt);
        } else {
            for (int r = 0; r < ib; ++r) {
                const float* a = A + static_cast<size_t>(i0 + r) * K;
                float* c = C + static_cast<size_t>(i0 + r) * N;
                int j = 0;
                for (; j + 4 <= N; j += 4) nt_row4(c, a, B, j, K, kt);
                for (; j < N; ++j) {
                    const float* b = B + static_cast<size_t>(j) * K;
                    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
                    for (int k = 0; k < K; ++k) acc += a[k] * b[k];
                    c[j] = acc;
                }
            }
        }
    }
}

template void matmul_nn<double>(double*, const double*, const double*, int, int, int);
template void matmul_nt<double>(double*, const double*, const double*, int, int, int);
template void matmul_tn<double>(double*, const double*, const double*, int, int, int);

} // namespace par

namespace {

// single-task kernels reused by the batched entry points
template <typename T>
void one_nn(T* C, const T* A, const T* B, int i0, int ib, int M, int K, int N) {
    (void)M;
    par::rows_nn(C, A, B, i0, ib, 0, N, K, N);
}

void one_nn_f(float* C, const float* A, const float* B, int i0, int ib, int M, int K, int N) {
    (void)M;
    if (ib == 4) {
        const int jt = N - N % par::kJT;
        for (int j0 = 0; j0 < jt; j0 += par::kJT)
            par::mk_4x64<false>(C, A + static_cast<size_t>(i0) * K, K, 1, B, j0, K, N, i0);
        if (jt < N) par::rows_nn(C, A, B, i0, 4, jt, N - jt, K, N);
    } else {
        par::rows_nn(C, A, B, i0, ib, 0, N, K, N);
    }
}

template <typename T>
void one_nt(T* C, const T* A, const T* B, int i0, int ib, int K, int N) {
    for (int r = 0; r < ib; ++r) {
        const T* a = A + static_cast<size_t>(i0 + r) * K;
        T* c = C + static_cast<size_t>(i0 + r) * N;
        for (int j = 0; j < N; ++j) {
            const T* b = B + static_cast<size_t>(j) * K;
            T acc = T(0);
#pragma omp simd reduction(+ : acc)
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

void one_nt_f(float* C, const float* A, const float* B, int i0, int ib, int K, int N) {
    const int kt = K - K % par::kVL;
    if (ib == 4) {
        par::nt_4rows(C, A, B, i0, K, N, kt);
        return;
    }
    for (int r = 0; r < ib; ++r) {
        const float* a = A + static_cast<size_t>(i0 + r) * K;
        float* c = C + static_cast<size_t>(i0 + r) * N;
        int j = 0;
        for (; j + 4 <= N; j += 4) par::nt_row4(c, a, B, j, K, kt);
        for (; j < N; ++j) {
            const float* b = B + static_cast<size_t>(j) * K;
            float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

template <typename T>
void one_tn(T* C, const T* A, const T* B, int i0, int ib, int M, int K, int N) {
    par::rows_tn(C, A, B, i0, ib, M, K, N);
}

void one_tn_f(float* C, const float* A, const float* B, int i0, int ib, int M, int K, int N) {
    if (ib == 4) {
        const int jt = N - N % par::kJT;
        for (int j0 = 0; j0 < jt; j0 += par::kJT)
            par::mk_4x64<false>(C, A + i0, 1, M, B, j0, K, N, i0);
        if (jt < N) {
            for (int r = 0; r < 4; ++r) {
                float* c = C + static_cast<size_t>(i0 + r) * N + jt;
                for (int j = 0; j < N - jt; ++j) c[j] = 0.0f;
            }
            for (int k = 0; k < K; ++k) {
                const float* arow = A + static_cast<size_t>(k) * M + i0;
                const float* b = B + static_cast<size_t>(k) * N + jt;
                for (int r = 0; r < 4; ++r) {
                    const float av = arow[r];
                    float* c = C + static_cast<size_t>(i0 + r) * N + jt;
#pragma omp simd
                    for (int j = 0; j < N - jt; ++j) c[j] += av * b[j];
                }
            }
        }
    } else {
        par::rows_tn(C, A, B, i0, ib, M, K, N);
    }
}

} // namespace

template <typename T>
void batched_matmul_nn(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N) {
    const int blocks = (M + 3) / 4;
    const long long total = static_cast<long long>(count) * blocks;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (long long t = 0; t < total; ++t) {
        const int b = static_cast<int>(t / blocks);
        const int i0 = static_cast<int>(t % blocks) * 4;
        const int ib = std::min(4, M - i0);
        if constexpr (std::is_same_v<T, float>)
            one_nn_f(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, M, K, N);
        else
            one_nn(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, M, K, N);
    }
}

template <typename T>
void batched_matmul_nt(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N) {
    const int blocks = (M + 3) / 4;
    const long long total = static_cast<long long>(count) * blocks;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (long long t = 0; t < total; ++t) {
        const int b = static_cast<int>(t / blocks);
        const int i0 = static_cast<int>(t % blocks) * 4;
        const int ib = std::min(4, M - i0);
        if constexpr (std::is_same_v<T, float>)
            one_nt_f(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, K, N);
        else
            one_nt(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, K, N);
    }
}

template <typename T>
void batched_matmul_tn(T* C, const T* A, const T* B, int count, size_t strideC, size_t strideA,
                       size_t strideB, int M, int K, int N) {
    const int blocks = (M + 3) / 4;
    const long long total = static_cast<long long>(count) * blocks;
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (long long t = 0; t < total; ++t) {
        const int b = static_cast<int>(t / blocks);
        const int i0 = static_cast<int>(t % blocks) * 4;
        const int ib = std::min(4, M - i0);
        if constexpr (std::is_same_v<T, float>)
            one_tn_f(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, M, K, N);
        else
            one_tn(C + b * strideC, A + b * strideA, B + b * strideB, i0, ib, M, K, N);
    }
}

template void batched_matmul_nn<float>(float*, const float*, const float*, int, size_t, size_t,
                                       size_t, int, int, int);
template void batched_matmul_nn<double>(double*, const double*, const double*, int, size_t, size_t,
                                        size_t, int, int, int);
template void batched_matmul_nt<float>(float*, const float*, const float*, int, size_t, size_t,
                                       size_t, int, int, int);
template void batched_matmul_nt<double>(double*, const double*, const double*, int, size_t, size_t,
                                        size_t, int, int, int);
template void batched_matmul_tn<float>(float*, const float*, const float*, int, size_t, size_t,
                                       size_t, int, int, int);
template void batched_matmul_tn<double>(double*, const double*, const double*, int, size_t, size_t,
                                        size_t, int, int, int);

} // namespace pcglab::kernels
