#pragma once

// Data-parallel inner loops shared by the projector, the spectral model, and
// the patch-based regularizers. Every kernel has a scalar reference variant;
// wider variants are selected once at runtime from what the CPU supports.
// Variants agree to rounding (reassociated sums, polynomial exp), and any
// single variant is deterministic for a given input, independent of threads.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace smr::simd {

/// Exponents below this are flushed: exp(-x) with x > kExpCutoff returns 0.
inline constexpr double kExpCutoff = 700.0;

struct KernelTable {
  const char* name;

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// out[i] = exp(-x[i]), flushed to 0 when x[i] > kExpCutoff
  void (*exp_neg)(const double* x, double* out, std::size_t n);

  /// sum_k values[k] * x[index[k]]
  double (*gather_dot)(const double* values, const std::uint32_t* index, const double* x,
                       std::size_t n);

  /// Sum of squared differences of two size x size blocks with a shared row stride.
  double (*block_ssd)(const double* a, const double* b, std::size_t stride, std::size_t size);

  /// out[i] = (a[i] - b[i])^2
  void (*squared_diff)(const double* a, const double* b, double* out, std::size_t n);

  /// num[i] += w[i] * x[i]; den[i] += w[i]
  void (*weighted_accumulate)(const double* w, const double* x, double* num, double* den,
                              std::size_t n);
};

const KernelTable& scalar_kernels();

/// Kernel table in use. Chosen on first call: SMR_SIMD={scalar,avx2,neon}
/// forces a variant, otherwise the widest supported one wins.
const KernelTable& active();

/// Every variant compiled in and runnable on this CPU, scalar first.
std::vector<const KernelTable*> available();

/// Looks up a runnable variant by name; nullptr when absent.
const KernelTable* find(std::string_view name);

/// Overrides the active table (tests and benchmarks).
void set_active(const KernelTable& table);

}  // namespace smr::simd
