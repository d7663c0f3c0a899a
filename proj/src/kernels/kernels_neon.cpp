#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "bdia/kernels.hpp"

namespace bdia::kernels {
namespace {

void lincomb2(double* out, double a, const double* x, double b,
              const double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t vb = vdupq_n_f64(b);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t ax = vmulq_f64(va, vld1q_f64(x + k));
    const float64x2_t by = vmulq_f64(vb, vld1q_f64(y + k));
    vst1q_f64(out + k, vaddq_f64(ax, by));
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void lincomb3(double* out, double a, const double* x, double b,
              const double* y, double c, const double* w, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t vb = vdupq_n_f64(b);
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t ax = vmulq_f64(va, vld1q_f64(x + k));
    const float64x2_t by = vmulq_f64(vb, vld1q_f64(y + k));
    const float64x2_t cw = vmulq_f64(vc, vld1q_f64(w + k));
    vst1q_f64(out + k, vaddq_f64(vaddq_f64(ax, by), cw));
  }
  for (; k < n; ++k) out[k] = (a * x[k] + b * y[k]) + c * w[k];
}

void blend(double* out, const double* x, double c, const double* y,
           const double* w, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t diff = vsubq_f64(vld1q_f64(y + k), vld1q_f64(w + k));
    vst1q_f64(out + k, vaddq_f64(vld1q_f64(x + k), vmulq_f64(vc, diff)));
  }
  for (; k < n; ++k) out[k] = x[k] + c * (y[k] - w[k]);
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + k), vld1q_f64(y + k));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double total = vaddvq_f64(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    total += d * d;
  }
  return total;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  double best = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::fabs(x[k] - y[k]);
    if (std::isnan(d)) return d;
    if (d > best) best = d;
  }
  return best;
}

double distance_sum(const double* point, const double* cols,
                    std::size_t stride, std::size_t count, std::size_t dim) {
  float64x2_t total = vdupq_n_f64(0.0);
  std::size_t j = 0;
  for (; j + 2 <= count; j += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      const float64x2_t d =
          vsubq_f64(vdupq_n_f64(point[k]), vld1q_f64(cols + k * stride + j));
      acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    total = vaddq_f64(total, vsqrtq_f64(acc));
  }
  double sum = vaddvq_f64(total);
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

constexpr KernelTable kNeonTable{
    Isa::kNeon,        &lincomb2,     &lincomb3,    &blend,
    &squared_distance, &max_abs_diff, &distance_sum,
};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace bdia::kernels
