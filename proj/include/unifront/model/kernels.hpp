#pragma once

// Dense row-major kernels used by the transformer.
//
// Every kernel exists twice: an OpenMP-parallel blocked version in
// `unifront::kernels` used by the model, and a naive serial version in
// `unifront::kernels::reference` kept as the test oracle and benchmark
// baseline. Parallel kernels partition output rows between threads, so each
// output element is computed by exactly one thread in a fixed order and
// results do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace unifront::kernels {

/// Work (M*N*K) below which the kernels stay single-threaded.
inline constexpr long kParallelThreshold = 1L << 16;

namespace reference {

/// C[MxN] (+)= A[MxK] * B[KxN]
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T sum = accumulate ? C[i * N + j] : T(0);
      for (int k = 0; k < K; ++k) sum += A[i * K + k] * B[k * N + j];
      C[i * N + j] = sum;
    }
  }
}

/// C[MxN] (+)= A^T * B, with A stored [KxM] and B [KxN].
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T sum = accumulate ? C[i * N + j] : T(0);
      for (int k = 0; k < K; ++k) sum += A[k * M + i] * B[k * N + j];
      C[i * N + j] = sum;
    }
  }
}

/// C[MxN] (+)= A * B^T, with A stored [MxK] and B [NxK].
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T sum = accumulate ? C[i * N + j] : T(0);
      for (int k = 0; k < K; ++k) sum += A[i * K + k] * B[j * K + k];
      C[i * N + j] = sum;
    }
  }
}

/// Row-wise softmax in place over `cols` entries.
template <typename T>
void softmax_rows(int rows, int cols, T* X) {
  for (int i = 0; i < rows; ++i) {
    T* x = X + static_cast<std::ptrdiff_t>(i) * cols;
    T mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    T sum = 0;
    for (int j = 0; j < cols; ++j) {
      x[j] = std::exp(x[j] - mx);
      sum += x[j];
    }
    for (int j = 0; j < cols; ++j) x[j] /= sum;
  }
}

}  // namespace reference

namespace detail {

// Rows [i0, i1) of C = A*B as row-wise axpys; the inner loop runs over
// contiguous columns of B and C and vectorizes.
template <typename T>
inline void band_nn(int i0, int i1, int N, int K, const T* __restrict A, const T* __restrict B, T* __restrict C,
                    bool accumulate) {
  for (int i = i0; i < i1; ++i) {
    T* __restrict c = C + static_cast<std::ptrdiff_t>(i) * N;
    if (!accumulate) std::fill(c, c + N, T(0));
    const T* a = A + static_cast<std::ptrdiff_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const T s = a[k];
      const T* __restrict b = B + static_cast<std::ptrdiff_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += s * b[j];
    }
  }
}

inline constexpr int kBandRows = 4;

}  // namespace detail

/// C[MxN] (+)= A[MxK] * B[KxN]
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  constexpr int R = detail::kBandRows;
  const long work = static_cast<long>(M) * N * K;
  const int bands = (M + R - 1) / R;
#pragma omp parallel for schedule(static) if (work >= kParallelThreshold && bands > 1)
  for (int band = 0; band < bands; ++band) {
    const int i0 = band * R;
    detail::band_nn<T>(i0, std::min(M, i0 + R), N, K, A, B, C, accumulate);
  }
}

/// C[MxN] (+)= A * B^T, with A stored [MxK] and B [NxK].
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  std::vector<T> bt(static_cast<std::size_t>(K) * N);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < K; ++k) bt[static_cast<std::size_t>(k) * N + j] = B[static_cast<std::size_t>(j) * K + k];
  }
  gemm_nn<T>(M, N, K, A, bt.data(), C, accumulate);
}

/// C[MxN] (+)= A^T * B, with A stored [KxM] and B [KxN].
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  constexpr int R = detail::kBandRows;
  const long work = static_cast<long>(M) * N * K;
  const int bands = (M + R - 1) / R;
#pragma omp parallel for schedule(static) if (work >= kParallelThreshold && bands > 1)
  for (int band = 0; band < bands; ++band) {
    const int i0 = band * R;
    const int i1 = std::min(M, i0 + R);
    if (!accumulate) std::fill(C + static_cast<std::ptrdiff_t>(i0) * N, C + static_cast<std::ptrdiff_t>(i1) * N, T(0));
    for (int k = 0; k < K; ++k) {
      const T* b = B + static_cast<std::ptrdiff_t>(k) * N;
      const T* a = A + static_cast<std::ptrdiff_t>(k) * M;
      for (int i = i0; i < i1; ++i) {
        const T s = a[i];
        if (s == T(0)) continue;
        T* c = C + static_cast<std::ptrdiff_t>(i) * N;
        for (int j = 0; j < N; ++j) c[j] += s * b[j];
      }
    }
  }
}

/// Row-wise softmax in place over `cols` entries.
template <typename T>
void softmax_rows(int rows, int cols, T* X) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols >= kParallelThreshold)
  for (int i = 0; i < rows; ++i) {
    T* x = X + static_cast<std::ptrdiff_t>(i) * cols;
    T mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    T sum = 0;
    for (int j = 0; j < cols; ++j) {
      x[j] = std::exp(x[j] - mx);
      sum += x[j];
    }
    const T inv = T(1) / sum;
    for (int j = 0; j < cols; ++j) x[j] *= inv;
  }
}

/// Sets the OpenMP thread count (no-op without OpenMP); returns the previous value.
int set_num_threads(int n);
int num_threads();

}  // namespace unifront::kernels
