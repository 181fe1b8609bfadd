// Compiled with -mavx2 -mfma. Only reached through the dispatch table after
// a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "sdpc/kernels.hpp"

namespace sdpc::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// yr[0:cols] += xr[0:in] * w, where w rows are ldw apart.
inline void acc_row(std::size_t in, std::size_t cols, std::size_t ldw, const double* xr,
                    const double* w, double* yr) {
  std::size_t o = 0;
  for (; o + 8 <= cols; o += 8) {
    __m256d a0 = _mm256_loadu_pd(yr + o);
    __m256d a1 = _mm256_loadu_pd(yr + o + 4);
    for (std::size_t i = 0; i < in; ++i) {
      const __m256d xv = _mm256_set1_pd(xr[i]);
      const double* wi = w + i * ldw + o;
      a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(wi), a0);
      a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(wi + 4), a1);
    }
    _mm256_storeu_pd(yr + o, a0);
    _mm256_storeu_pd(yr + o + 4, a1);
  }
  for (; o + 4 <= cols; o += 4) {
    __m256d a0 = _mm256_loadu_pd(yr + o);
    for (std::size_t i = 0; i < in; ++i) {
      a0 = _mm256_fmadd_pd(_mm256_set1_pd(xr[i]), _mm256_loadu_pd(w + i * ldw + o), a0);
    }
    _mm256_storeu_pd(yr + o, a0);
  }
  for (; o < cols; ++o) {
    double acc = yr[o];
    for (std::size_t i = 0; i < in; ++i) acc = std::fma(xr[i], w[i * ldw + o], acc);
    yr[o] = acc;
  }
}

void gemm_acc(std::size_t rows, std::size_t in, std::size_t out, const double* x, const double* w,
              double* y) {
  std::size_t r = 0;
  // 4 rows x 8 columns register block.
  for (; r + 4 <= rows; r += 4) {
    const double* x0 = x + r * in;
    const double* x1 = x0 + in;
    const double* x2 = x1 + in;
    const double* x3 = x2 + in;
    double* y0 = y + r * out;
    double* y1 = y0 + out;
    double* y2 = y1 + out;
    double* y3 = y2 + out;
    std::size_t o = 0;
    for (; o + 8 <= out; o += 8) {
      __m256d c00 = _mm256_loadu_pd(y0 + o), c01 = _mm256_loadu_pd(y0 + o + 4);
      __m256d c10 = _mm256_loadu_pd(y1 + o), c11 = _mm256_loadu_pd(y1 + o + 4);
      __m256d c20 = _mm256_loadu_pd(y2 + o), c21 = _mm256_loadu_pd(y2 + o + 4);
      __m256d c30 = _mm256_loadu_pd(y3 + o), c31 = _mm256_loadu_pd(y3 + o + 4);
      for (std::size_t i = 0; i < in; ++i) {
        const double* wi = w + i * out + o;
        const __m256d w0 = _mm256_loadu_pd(wi);
        const __m256d w1 = _mm256_loadu_pd(wi + 4);
        __m256d xv = _mm256_set1_pd(x0[i]);
        c00 = _mm256_fmadd_pd(xv, w0, c00);
        c01 = _mm256_fmadd_pd(xv, w1, c01);
        xv = _mm256_set1_pd(x1[i]);
        c10 = _mm256_fmadd_pd(xv, w0, c10);
        c11 = _mm256_fmadd_pd(xv, w1, c11);
        xv = _mm256_set1_pd(x2[i]);
        c20 = _mm256_fmadd_pd(xv, w0, c20);
        c21 = _mm256_fmadd_pd(xv, w1, c21);
        xv = _mm256_set1_pd(x3[i]);
        c30 = _mm256_fmadd_pd(xv, w0, c30);
        c31 = _mm256_fmadd_pd(xv, w1, c31);
      }
      _mm256_storeu_pd(y0 + o, c00);
      _mm256_storeu_pd(y0 + o + 4, c01);
      _mm256_storeu_pd(y1 + o, c10);
      _mm256_storeu_pd(y1 + o + 4, c11);
      _mm256_storeu_pd(y2 + o, c20);
      _mm256_storeu_pd(y2 + o + 4, c21);
      _mm256_storeu_pd(y3 + o, c30);
      _mm256_storeu_pd(y3 + o + 4, c31);
    }
    if (o < out) {
      for (std::size_t k = 0; k < 4; ++k) {
        acc_row(in, out - o, out, x0 + k * in, w + o, y0 + k * out + o);
      }
    }
  }
  for (; r < rows; ++r) acc_row(in, out, out, x + r * in, w, y + r * out);
}

void gemm_bt(std::size_t rows, std::size_t in, std::size_t out, const double* g, const double* w,
             double* dx) {
  const std::size_t vec_end = out - out % 4;
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* g0 = g + r * out;
    const double* g1 = g0 + out;
    const double* g2 = g1 + out;
    const double* g3 = g2 + out;
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w + i * out;
      __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
      for (std::size_t o = 0; o < vec_end; o += 4) {
        const __m256d wv = _mm256_loadu_pd(wi + o);
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(g0 + o), wv, a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(g1 + o), wv, a1);
        a2 = _mm256_fmadd_pd(_mm256_loadu_pd(g2 + o), wv, a2);
        a3 = _mm256_fmadd_pd(_mm256_loadu_pd(g3 + o), wv, a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (std::size_t o = vec_end; o < out; ++o) {
        s0 = std::fma(g0[o], wi[o], s0);
        s1 = std::fma(g1[o], wi[o], s1);
        s2 = std::fma(g2[o], wi[o], s2);
        s3 = std::fma(g3[o], wi[o], s3);
      }
      dx[r * in + i] = s0;
      dx[(r + 1) * in + i] = s1;
      dx[(r + 2) * in + i] = s2;
      dx[(r + 3) * in + i] = s3;
    }
  }
  for (; r < rows; ++r) {
    const double* gr = g + r * out;
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w + i * out;
      __m256d a = _mm256_setzero_pd();
      for (std::size_t o = 0; o < vec_end; o += 4) {
        a = _mm256_fmadd_pd(_mm256_loadu_pd(gr + o), _mm256_loadu_pd(wi + o), a);
      }
      double s = hsum(a);
      for (std::size_t o = vec_end; o < out; ++o) s = std::fma(gr[o], wi[o], s);
      dx[r * in + i] = s;
    }
  }
}

// dw[i, 0:cols] += sum_r x[r, i] * g[r, 0:cols] for a single i.
inline void at_acc_col(std::size_t rows, std::size_t in, std::size_t cols, std::size_t ldg,
                       const double* xcol, const double* g, double* dwi) {
  std::size_t o = 0;
  for (; o + 4 <= cols; o += 4) {
    __m256d a = _mm256_loadu_pd(dwi + o);
    for (std::size_t r = 0; r < rows; ++r) {
      a = _mm256_fmadd_pd(_mm256_set1_pd(xcol[r * in]), _mm256_loadu_pd(g + r * ldg + o), a);
    }
    _mm256_storeu_pd(dwi + o, a);
  }
  for (; o < cols; ++o) {
    double acc = dwi[o];
    for (std::size_t r = 0; r < rows; ++r) acc = std::fma(xcol[r * in], g[r * ldg + o], acc);
    dwi[o] = acc;
  }
}

void gemm_at_acc(std::size_t rows, std::size_t in, std::size_t out, const double* x,
                 const double* g, double* dw) {
  std::size_t i = 0;
  // 4 input features x 8 output columns register block.
  for (; i + 4 <= in; i += 4) {
    double* d0 = dw + i * out;
    double* d1 = d0 + out;
    double* d2 = d1 + out;
    double* d3 = d2 + out;
    std::size_t o = 0;
    for (; o + 8 <= out; o += 8) {
      __m256d c00 = _mm256_loadu_pd(d0 + o), c01 = _mm256_loadu_pd(d0 + o + 4);
      __m256d c10 = _mm256_loadu_pd(d1 + o), c11 = _mm256_loadu_pd(d1 + o + 4);
      __m256d c20 = _mm256_loadu_pd(d2 + o), c21 = _mm256_loadu_pd(d2 + o + 4);
      __m256d c30 = _mm256_loadu_pd(d3 + o), c31 = _mm256_loadu_pd(d3 + o + 4);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = g + r * out + o;
        const double* xr = x + r * in + i;
        const __m256d g0 = _mm256_loadu_pd(gr);
        const __m256d g1 = _mm256_loadu_pd(gr + 4);
        __m256d xv = _mm256_set1_pd(xr[0]);
        c00 = _mm256_fmadd_pd(xv, g0, c00);
        c01 = _mm256_fmadd_pd(xv, g1, c01);
        xv = _mm256_set1_pd(xr[1]);
        c10 = _mm256_fmadd_pd(xv, g0, c10);
        c11 = _mm256_fmadd_pd(xv, g1, c11);
        xv = _mm256_set1_pd(xr[2]);
        c20 = _mm256_fmadd_pd(xv, g0, c20);
        c21 = _mm256_fmadd_pd(xv, g1, c21);
        xv = _mm256_set1_pd(xr[3]);
        c30 = _mm256_fmadd_pd(xv, g0, c30);
        c31 = _mm256_fmadd_pd(xv, g1, c31);
      }
      _mm256_storeu_pd(d0 + o, c00);
      _mm256_storeu_pd(d0 + o + 4, c01);
      _mm256_storeu_pd(d1 + o, c10);
      _mm256_storeu_pd(d1 + o + 4, c11);
      _mm256_storeu_pd(d2 + o, c20);
      _mm256_storeu_pd(d2 + o + 4, c21);
      _mm256_storeu_pd(d3 + o, c30);
      _mm256_storeu_pd(d3 + o + 4, c31);
    }
    if (o < out) {
      for (std::size_t k = 0; k < 4; ++k) {
        at_acc_col(rows, in, out - o, out, x + i + k, g + o, dw + (i + k) * out + o);
      }
    }
  }
  for (; i < in; ++i) at_acc_col(rows, in, out, out, x + i, g, dw + i * out);
}

void adam_update(std::size_t n, double* params, const double* grads, double* m, double* v,
                 double lr, double beta1, double beta2, double eps, double bias1, double bias2) {
  const __m256d b1 = _mm256_set1_pd(beta1), c1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2), c2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d bc1 = _mm256_set1_pd(bias1), bc2 = _mm256_set1_pd(bias2);
  const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d g = _mm256_loadu_pd(grads + k);
    // Same operation order as the scalar reference (no contraction).
    __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + k)), _mm256_mul_pd(c1, g));
    __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + k)),
                               _mm256_mul_pd(_mm256_mul_pd(c2, g), g));
    _mm256_storeu_pd(m + k, mv);
    _mm256_storeu_pd(v + k, vv);
    const __m256d m_hat = _mm256_div_pd(mv, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lrv, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), epsv));
    _mm256_storeu_pd(params + k, _mm256_sub_pd(_mm256_loadu_pd(params + k), step));
  }
  for (; k < n; ++k) {
    const double g = grads[k];
    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
    const double m_hat = m[k] / bias1;
    const double v_hat = v[k] / bias2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

constexpr KernelTable kAvx2{"avx2", &gemm_acc, &gemm_bt, &gemm_at_acc, &adam_update};

}  // namespace

const KernelTable* avx2_table_unchecked() { return &kAvx2; }

}  // namespace sdpc::kernels
