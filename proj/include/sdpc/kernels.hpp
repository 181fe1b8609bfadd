#pragma once

// Dense linear-algebra kernels behind the MLP engine. Every kernel has a
// portable scalar reference implementation; an AVX2/FMA variant is compiled
// on x86-64 and selected at runtime when the CPU supports it. The selection
// can be forced with the SDPC_KERNELS environment variable ("scalar" or
// "avx2") or with select_kernels().

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sdpc::kernels {

/// All matrices are row-major. Shapes: x [rows x in], w [in x out],
/// y/g [rows x out], dx [rows x in], dw [in x out].
struct KernelTable {
  const char* name;
  /// y += x * w
  void (*gemm_acc)(std::size_t rows, std::size_t in, std::size_t out, const double* x,
                   const double* w, double* y);
  /// dx = g * w^T
  void (*gemm_bt)(std::size_t rows, std::size_t in, std::size_t out, const double* g,
                  const double* w, double* dx);
  /// dw += x^T * g
  void (*gemm_at_acc)(std::size_t rows, std::size_t in, std::size_t out, const double* x,
                      const double* g, double* dw);
  /// Bias-corrected Adam update over n coordinates. m and v are updated in place.
  void (*adam_update)(std::size_t n, double* params, const double* grads, double* m, double* v,
                      double lr, double beta1, double beta2, double eps, double bias1,
                      double bias2);
};

const KernelTable& scalar_table();

/// Null when the variant was not compiled or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// Table used by the library. Chosen once on first use.
const KernelTable& active();

/// Force a table by name. Returns false (and changes nothing) if unavailable.
bool select_kernels(std::string_view name);

}  // namespace sdpc::kernels
