#include <atomic>
#include <cstdlib>
#include <string_view>

#include "smr/simd/kernels.hpp"

namespace smr::simd {

#if defined(SMR_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif
#if defined(SMR_HAVE_NEON_KERNELS)
const KernelTable& neon_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SMR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() {
  const auto candidates = available();
  if (const char* env = std::getenv("SMR_SIMD"); env != nullptr && *env != '\0') {
    if (const KernelTable* forced = find(env)) return forced;
  }
  return candidates.back();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> tables{&scalar_kernels()};
#if defined(SMR_HAVE_AVX2_KERNELS)
  if (cpu_has_avx2()) tables.push_back(&avx2_kernels());
#endif
#if defined(SMR_HAVE_NEON_KERNELS)
  tables.push_back(&neon_kernels());
#endif
  return tables;
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) { active_slot().store(&table, std::memory_order_release); }

}  // namespace smr::simd
