// AVX2 + FMA variants. This translation unit alone is built with -mavx2 -mfma;
// nothing here may run unless dispatch has confirmed CPU support.

#include <immintrin.h>

#include <cstring>

#include "smr/simd/kernels.hpp"

namespace smr::simd {
namespace {

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// exp(-x) for four lanes: Cody-Waite reduction to |r| <= ln2/2, degree-13
// Taylor polynomial, then scaling by 2^k through the exponent field.
inline __m256d exp_neg4(__m256d x) {
  const __m256d cutoff = _mm256_set1_pd(kExpCutoff);
  const __m256d flush = _mm256_cmp_pd(x, cutoff, _CMP_GT_OQ);
  __m256d y = _mm256_sub_pd(_mm256_setzero_pd(), x);
  y = _mm256_max_pd(y, _mm256_set1_pd(-kExpCutoff));
  y = _mm256_min_pd(y, _mm256_set1_pd(709.0));

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(0.693147180559945286226764);
  const __m256d ln2_lo = _mm256_set1_pd(2.319046813846299558e-17);
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(y, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, y);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  // 1/13!, 1/12!, ..., 1/2!, 1, 1
  static constexpr double kCoeff[] = {
      1.6059043836821614599e-10, 2.0876756987868098979e-09, 2.5052108385441718775e-08,
      2.7557319223985890653e-07, 2.7557319223985890653e-06, 2.4801587301587301587e-05,
      1.9841269841269841270e-04, 1.3888888888888888889e-03, 8.3333333333333333333e-03,
      4.1666666666666666667e-02, 1.6666666666666666667e-01, 5.0000000000000000000e-01,
      1.0, 1.0};
  __m256d p = _mm256_set1_pd(kCoeff[0]);
  for (std::size_t c = 1; c < sizeof(kCoeff) / sizeof(kCoeff[0]); ++c) {
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kCoeff[c]));
  }

  const __m128i ki = _mm256_cvtpd_epi32(k);
  const __m256i biased = _mm256_add_epi64(_mm256_cvtepi32_epi64(ki), _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  const __m256d result = _mm256_mul_pd(p, scale);
  return _mm256_andnot_pd(flush, result);
}

void exp_neg(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_neg4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    // Pad the tail so every lane goes through the same polynomial.
    alignas(32) double in[4] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    std::memcpy(in, x + i, (n - i) * sizeof(double));
    _mm256_store_pd(res, exp_neg4(_mm256_load_pd(in)));
    std::memcpy(out + i, res, (n - i) * sizeof(double));
  }
}

double gather_dot(const double* values, const std::uint32_t* index, const double* x,
                  std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + k));
    const __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + k + 4));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(values + k), _mm256_i32gather_pd(x, i0, 8), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(values + k + 4), _mm256_i32gather_pd(x, i1, 8), acc1);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) sum += values[k] * x[index[k]];
  return sum;
}

double block_ssd(const double* a, const double* b, std::size_t stride, std::size_t size) {
  __m256d acc = _mm256_setzero_pd();
  double tail = 0.0;
  for (std::size_t r = 0; r < size; ++r) {
    const double* ar = a + r * stride;
    const double* br = b + r * stride;
    std::size_t c = 0;
    for (; c + 4 <= size; c += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(ar + c), _mm256_loadu_pd(br + c));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    for (; c < size; ++c) {
      const double d = ar[c] - br[c];
      tail += d * d;
    }
  }
  return hsum(acc) + tail;
}

void squared_diff(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(d, d));
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    out[i] = d * d;
  }
}

void weighted_accumulate(const double* w, const double* x, double* num, double* den,
                         std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vw = _mm256_loadu_pd(w + i);
    _mm256_storeu_pd(num + i, _mm256_fmadd_pd(vw, _mm256_loadu_pd(x + i), _mm256_loadu_pd(num + i)));
    _mm256_storeu_pd(den + i, _mm256_add_pd(_mm256_loadu_pd(den + i), vw));
  }
  for (; i < n; ++i) {
    num[i] += w[i] * x[i];
    den[i] += w[i];
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2",    dot,          axpy,         exp_neg, gather_dot,
                                 block_ssd, squared_diff, weighted_accumulate};
  return table;
}

}  // namespace smr::simd
