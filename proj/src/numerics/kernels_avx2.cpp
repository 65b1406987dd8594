#include <immintrin.h>

#include "ilnet/numerics/kernels.hpp"

namespace ilnet::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// C tile of 4 rows x 8 columns held in registers; A is read through strides
// so the same tile serves C += A B (a_row = k, a_col = 1) and C += A^T B
// (a_row = 1, a_col = m).
template <bool Full>
inline void tile_4x8(std::size_t rows, std::size_t k, const double* a, std::size_t a_row, std::size_t a_col,
                     const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  __m256d s[4][2];
  for (std::size_t r = 0; r < 4; ++r) {
    if (Full || r < rows) {
      s[r][0] = _mm256_loadu_pd(c + r * ldc);
      s[r][1] = _mm256_loadu_pd(c + r * ldc + 4);
    } else {
      s[r][0] = s[r][1] = _mm256_setzero_pd();
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    for (std::size_t r = 0; r < 4; ++r) {
      if (!Full && r >= rows) break;
      const __m256d av = _mm256_set1_pd(a[r * a_row + p * a_col]);
      s[r][0] = _mm256_fmadd_pd(av, b0, s[r][0]);
      s[r][1] = _mm256_fmadd_pd(av, b1, s[r][1]);
    }
  }
  for (std::size_t r = 0; r < 4; ++r) {
    if (!Full && r >= rows) break;
    _mm256_storeu_pd(c + r * ldc, s[r][0]);
    _mm256_storeu_pd(c + r * ldc + 4, s[r][1]);
  }
}

// Shared driver for the two layouts whose inner dimension runs down B's rows.
void gemm_rows(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_row, std::size_t a_col,
               const double* b, double* c) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) tile_4x8<true>(4, k, a + i * a_row, a_row, a_col, b + j, n, c + i * n + j, n);
    if (i < m) tile_4x8<false>(m - i, k, a + i * a_row, a_row, a_col, b + j, n, c + i * n + j, n);
  }
  if (j == n) return;
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * a_row + p * a_col];
      for (std::size_t jj = j; jj < n; ++jj) ci[jj] += av * b[p * n + jj];
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  gemm_rows(m, n, k, a, k, 1, b, c);
}

// Two rows of A against four rows of B: eight independent dot products.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const std::size_t vec = n - n % 4;
  auto tail = [&](std::size_t i, std::size_t p) {
    double s = 0.0;
    for (std::size_t q = vec; q < n; ++q) s += a[i * n + q] * b[p * n + q];
    return s;
  };
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * n;
    const double* a1 = a0 + n;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      __m256d s[2][4];
      for (auto& row : s) {
        for (auto& v : row) v = _mm256_setzero_pd();
      }
      for (std::size_t q = 0; q < vec; q += 4) {
        const __m256d x0 = _mm256_loadu_pd(a0 + q);
        const __m256d x1 = _mm256_loadu_pd(a1 + q);
        for (std::size_t u = 0; u < 4; ++u) {
          const __m256d y = _mm256_loadu_pd(b + (p + u) * n + q);
          s[0][u] = _mm256_fmadd_pd(x0, y, s[0][u]);
          s[1][u] = _mm256_fmadd_pd(x1, y, s[1][u]);
        }
      }
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t u = 0; u < 4; ++u) c[(i + r) * k + p + u] += hsum(s[r][u]) + tail(i + r, p + u);
      }
    }
    for (; p < k; ++p) {
      c[i * k + p] += dot(a0, b + p * n, n);
      c[(i + 1) * k + p] += dot(a1, b + p * n, n);
    }
  }
  for (; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) c[i * k + p] += dot(a + i * n, b + p * n, n);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  // C[k, n] += A^T B: rows of C walk A's columns, the inner loop runs over m.
  gemm_rows(k, n, m, a, 1, k, b, c);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", gemm_nn, gemm_nt, gemm_tn, dot, axpy};
  return &table;
}

}  // namespace ilnet::kernels
