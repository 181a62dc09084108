#include <cmath>

#include "smr/simd/kernels.hpp"

namespace smr::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void exp_neg(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > kExpCutoff ? 0.0 : std::exp(-x[i]);
}

double gather_dot(const double* values, const std::uint32_t* index, const double* x,
                  std::size_t n) {
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += values[k] * x[index[k]];
  return sum;
}

double block_ssd(const double* a, const double* b, std::size_t stride, std::size_t size) {
  double sum = 0.0;
  for (std::size_t r = 0; r < size; ++r) {
    const double* ar = a + r * stride;
    const double* br = b + r * stride;
    for (std::size_t c = 0; c < size; ++c) {
      const double d = ar[c] - br[c];
      sum += d * d;
    }
  }
  return sum;
}

void squared_diff(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    out[i] = d * d;
  }
}

void weighted_accumulate(const double* w, const double* x, double* num, double* den,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    num[i] += w[i] * x[i];
    den[i] += w[i];
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot,          axpy,         exp_neg, gather_dot,
                                 block_ssd, squared_diff, weighted_accumulate};
  return table;
}

}  // namespace smr::simd
