#include <cstdlib>
#include <string_view>

#include "sdpc/kernels.hpp"

namespace sdpc::kernels {

#if defined(SDPC_HAVE_AVX2)
const KernelTable* avx2_table_unchecked();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SDPC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_table();
  if (const char* forced = std::getenv("SDPC_KERNELS")) {
    const std::string_view name(forced);
    if (name == "scalar") return &scalar_table();
    if (name == "avx2" && best != nullptr) return best;
  }
  return best != nullptr ? best : &scalar_table();
}

const KernelTable*& current() {
  static const KernelTable* table = initial_table();
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(SDPC_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
  if (const KernelTable* t = avx2_table()) tables.push_back(t);
  return tables;
}

const KernelTable& active() { return *current(); }

bool select_kernels(std::string_view name) {
  for (const KernelTable* t : available_tables()) {
    if (name == t->name) {
      current() = t;
      return true;
    }
  }
  return false;
}

}  // namespace sdpc::kernels
