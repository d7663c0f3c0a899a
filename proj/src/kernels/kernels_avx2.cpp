#include <immintrin.h>

#include <cmath>
#include <limits>

#include "bdia/kernels.hpp"

namespace bdia::kernels {
namespace {

void lincomb2(double* out, double a, const double* x, double b,
              const double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(out + k, _mm256_add_pd(ax, by));
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void lincomb3(double* out, double a, const double* x, double b,
              const double* y, double c, const double* w, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + k));
    const __m256d cw = _mm256_mul_pd(vc, _mm256_loadu_pd(w + k));
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_add_pd(ax, by), cw));
  }
  for (; k < n; ++k) out[k] = (a * x[k] + b * y[k]) + c * w[k];
}

void blend(double* out, const double* x, double c, const double* y,
           const double* w, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d diff =
        _mm256_sub_pd(_mm256_loadu_pd(y + k), _mm256_loadu_pd(w + k));
    _mm256_storeu_pd(out + k,
                     _mm256_add_pd(_mm256_loadu_pd(x + k), _mm256_mul_pd(vc, diff)));
  }
  for (; k < n; ++k) out[k] = x[k] + c * (y[k] - w[k]);
}

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = hsum(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    total += d * d;
  }
  return total;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  __m256d nan_seen = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_andnot_pd(
        sign_mask, _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    nan_seen = _mm256_or_pd(nan_seen, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    m = _mm256_max_pd(m, d);
  }
  if (_mm256_movemask_pd(nan_seen) != 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double best = lanes[0];
  for (int l = 1; l < 4; ++l) best = lanes[l] > best ? lanes[l] : best;
  for (; k < n; ++k) {
    const double d = std::fabs(x[k] - y[k]);
    if (std::isnan(d)) return d;
    if (d > best) best = d;
  }
  return best;
}

double distance_sum(const double* point, const double* cols,
                    std::size_t stride, std::size_t count, std::size_t dim) {
  __m256d total = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < dim; ++k) {
      const __m256d d = _mm256_sub_pd(_mm256_set1_pd(point[k]),
                                      _mm256_loadu_pd(cols + k * stride + j));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    total = _mm256_add_pd(total, _mm256_sqrt_pd(acc));
  }
  double sum = hsum(total);
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = point[k] - cols[k * stride + j];
      acc += d * d;
    }
    sum += std::sqrt(acc);
  }
  return sum;
}

constexpr KernelTable kAvx2Table{
    Isa::kAvx2,        &lincomb2,     &lincomb3,    &blend,
    &squared_distance, &max_abs_diff, &distance_sum,
};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2Table : nullptr;
}

}  // namespace bdia::kernels
