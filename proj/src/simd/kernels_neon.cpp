// AArch64 NEON variants (two doubles per register). Built only on arm64 targets.

#include <arm_neon.h>

#include <cstring>

#include "smr/simd/kernels.hpp"

namespace smr::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

inline float64x2_t exp_neg2(float64x2_t x) {
  const uint64x2_t flush = vcgtq_f64(x, vdupq_n_f64(kExpCutoff));
  float64x2_t y = vnegq_f64(x);
  y = vmaxq_f64(y, vdupq_n_f64(-kExpCutoff));
  y = vminq_f64(y, vdupq_n_f64(709.0));
  const float64x2_t k = vrndnq_f64(vmulq_f64(y, vdupq_n_f64(1.4426950408889634074)));
  float64x2_t r = vfmsq_f64(y, k, vdupq_n_f64(0.693147180559945286226764));
  r = vfmsq_f64(r, k, vdupq_n_f64(2.319046813846299558e-17));
  static constexpr double kCoeff[] = {
      1.6059043836821614599e-10, 2.0876756987868098979e-09, 2.5052108385441718775e-08,
      2.7557319223985890653e-07, 2.7557319223985890653e-06, 2.4801587301587301587e-05,
      1.9841269841269841270e-04, 1.3888888888888888889e-03, 8.3333333333333333333e-03,
      4.1666666666666666667e-02, 1.6666666666666666667e-01, 5.0000000000000000000e-01,
      1.0, 1.0};
  float64x2_t p = vdupq_n_f64(kCoeff[0]);
  for (std::size_t c = 1; c < sizeof(kCoeff) / sizeof(kCoeff[0]); ++c) {
    p = vfmaq_f64(vdupq_n_f64(kCoeff[c]), p, r);
  }
  const int64x2_t biased = vaddq_s64(vcvtq_s64_f64(k), vdupq_n_s64(1023));
  const float64x2_t scale = vreinterpretq_f64_s64(vshlq_n_s64(biased, 52));
  const float64x2_t result = vmulq_f64(p, scale);
  return vreinterpretq_f64_u64(vbicq_u64(vreinterpretq_u64_f64(result), flush));
}

void exp_neg(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, exp_neg2(vld1q_f64(x + i)));
  if (i < n) {
    double in[2] = {x[i], 0.0};
    double res[2];
    vst1q_f64(res, exp_neg2(vld1q_f64(in)));
    out[i] = res[0];
  }
}

double gather_dot(const double* values, const std::uint32_t* index, const double* x,
                  std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const double g[2] = {x[index[k]], x[index[k + 1]]};
    acc = vfmaq_f64(acc, vld1q_f64(values + k), vld1q_f64(g));
  }
  double sum = vaddvq_f64(acc);
  for (; k < n; ++k) sum += values[k] * x[index[k]];
  return sum;
}

double block_ssd(const double* a, const double* b, std::size_t stride, std::size_t size) {
  float64x2_t acc = vdupq_n_f64(0.0);
  double tail = 0.0;
  for (std::size_t r = 0; r < size; ++r) {
    const double* ar = a + r * stride;
    const double* br = b + r * stride;
    std::size_t c = 0;
    for (; c + 2 <= size; c += 2) {
      const float64x2_t d = vsubq_f64(vld1q_f64(ar + c), vld1q_f64(br + c));
      acc = vfmaq_f64(acc, d, d);
    }
    for (; c < size; ++c) {
      const double d = ar[c] - br[c];
      tail += d * d;
    }
  }
  return vaddvq_f64(acc) + tail;
}

void squared_diff(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(out + i, vmulq_f64(d, d));
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    out[i] = d * d;
  }
}

void weighted_accumulate(const double* w, const double* x, double* num, double* den,
                         std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vw = vld1q_f64(w + i);
    vst1q_f64(num + i, vfmaq_f64(vld1q_f64(num + i), vw, vld1q_f64(x + i)));
    vst1q_f64(den + i, vaddq_f64(vld1q_f64(den + i), vw));
  }
  for (; i < n; ++i) {
    num[i] += w[i] * x[i];
    den[i] += w[i];
  }
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{"neon",    dot,          axpy,         exp_neg, gather_dot,
                                 block_ssd, squared_diff, weighted_accumulate};
  return table;
}

}  // namespace smr::simd
