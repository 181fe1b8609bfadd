#include "sdpc/kernels.hpp"

#include <cmath>

namespace sdpc::kernels {
namespace {

void gemm_acc(std::size_t rows, std::size_t in, std::size_t out, const double* x, const double* w,
              double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    double* yr = y + r * out;
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = xr[i];
      const double* wi = w + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xv * wi[o];
    }
  }
}

void gemm_bt(std::size_t rows, std::size_t in, std::size_t out, const double* g, const double* w,
             double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* gr = g + r * out;
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w + i * out;
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += gr[o] * wi[o];
      dx[r * in + i] = acc;
    }
  }
}

void gemm_at_acc(std::size_t rows, std::size_t in, std::size_t out, const double* x,
                 const double* g, double* dw) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    const double* gr = g + r * out;
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = xr[i];
      double* dwi = dw + i * out;
      for (std::size_t o = 0; o < out; ++o) dwi[o] += xv * gr[o];
    }
  }
}

void adam_update(std::size_t n, double* params, const double* grads, double* m, double* v,
                 double lr, double beta1, double beta2, double eps, double bias1, double bias2) {
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grads[k];
    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
    const double m_hat = m[k] / bias1;
    const double v_hat = v[k] / bias2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

constexpr KernelTable kScalar{"scalar", &gemm_acc, &gemm_bt, &gemm_at_acc, &adam_update};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace sdpc::kernels
