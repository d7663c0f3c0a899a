#pragma once

// Vector arithmetic used by every solver step and metric.
//
// Each kernel has a scalar reference implementation plus SIMD variants
// (AVX2 on x86-64, NEON on aarch64).  The variant is chosen once per process
// from the CPU's capabilities; BDIA_ISA=scalar|avx2|neon in the environment
// overrides the choice.  Elementwise kernels produce bit-identical results on
// every path.  Reductions differ only in summation order.

#include <cassert>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace bdia::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // out = a*x + b*y
  void (*lincomb2)(double* out, double a, const double* x, double b,
                   const double* y, std::size_t n);
  // out = (a*x + b*y) + c*w
  void (*lincomb3)(double* out, double a, const double* x, double b,
                   const double* y, double c, const double* w, std::size_t n);
  // out = x + c*(y - w)
  void (*blend)(double* out, const double* x, double c, const double* y,
                const double* w, std::size_t n);
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  double (*max_abs_diff)(const double* x, const double* y, std::size_t n);
  // Sum over j < count of || point - column_j ||, where the points are
  // stored column-major: coordinate k of point j lives at cols[k*stride + j].
  double (*distance_sum)(const double* point, const double* cols,
                         std::size_t stride, std::size_t count,
                         std::size_t dim);
};

const KernelTable& scalar_table();
// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable* table_for(Isa isa);
const KernelTable& active();

// Test hook. Not thread-safe with respect to concurrent kernel calls.
void set_active(Isa isa);

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

inline void lincomb(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> y) {
  assert(x.size() == out.size() && y.size() == out.size());
  active().lincomb2(out.data(), a, x.data(), b, y.data(), out.size());
}

inline void lincomb(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> y, double c,
                    std::span<const double> w) {
  assert(x.size() == out.size() && y.size() == out.size() &&
         w.size() == out.size());
  active().lincomb3(out.data(), a, x.data(), b, y.data(), c, w.data(),
                    out.size());
}

inline void blend(std::span<double> out, std::span<const double> x, double c,
                  std::span<const double> y, std::span<const double> w) {
  assert(x.size() == out.size() && y.size() == out.size() &&
         w.size() == out.size());
  active().blend(out.data(), x.data(), c, y.data(), w.data(), out.size());
}

inline double squared_distance(std::span<const double> x,
                               std::span<const double> y) {
  assert(x.size() == y.size());
  return active().squared_distance(x.data(), y.data(), x.size());
}

inline double max_abs_diff(std::span<const double> x,
                           std::span<const double> y) {
  assert(x.size() == y.size());
  return active().max_abs_diff(x.data(), y.data(), x.size());
}

}  // namespace bdia::kernels
