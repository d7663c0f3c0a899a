#include <cmath>

#include "bdia/kernels.hpp"

namespace bdia::kernels {
namespace {

void lincomb2(double* out, double a, const double* x, double b,
              const double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void lincomb3(double* out, double a, const double* x, double b,
              const double* y, double c, const double* w, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = (a * x[k] + b * y[k]) + c * w[k];
}

void blend(double* out, const double* x, double c, const double* y,
           const double* w, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = x[k] + c * (y[k] - w[k]);
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    acc += d * d;
  }
  return acc;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::fabs(x[k] - y[k]);
    if (std::isnan(d)) return d;
    if (d > m) m = d;
  }
  return m;
}

double distance_sum(const double* point, const double* cols,
                    std::size_t stride, std::size_t count, std::size_t dim) {
  double total = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = point[k] - cols[k * stride + j];
      acc += d * d;
    }
    total += std::sqrt(acc);
  }
  return total;
}

constexpr KernelTable kScalarTable{
    Isa::kScalar, &lincomb2,     &lincomb3,    &blend,
    &squared_distance, &max_abs_diff, &distance_sum,
};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace bdia::kernels
