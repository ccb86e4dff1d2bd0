#include <atomic>
#include <cstdlib>
#include <string>

#include "vfp/simd/kernels.hpp"

namespace vfp::simd {
namespace {

bool cpu_has_avx2() {
#if defined(VFP_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* find_table(std::string_view name) {
  for (const KernelTable* table : available_kernels()) {
    if (name == table->name) return table;
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("VFP_SIMD")) {
    if (const KernelTable* table = find_table(env)) return table;
  }
  return &best_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> tables{&scalar_kernels()};
#if defined(VFP_HAVE_AVX2_TU)
  if (cpu_has_avx2()) tables.push_back(&detail::avx2_table());
#endif
#if defined(VFP_HAVE_NEON_TU)
  tables.push_back(&detail::neon_table());
#endif
  return tables;
}

const KernelTable& best_kernels() { return *available_kernels().back(); }

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
  const KernelTable* table = find_table(name);
  if (table == nullptr) return false;
  active_slot().store(table, std::memory_order_release);
  return true;
}

}  // namespace vfp::simd
