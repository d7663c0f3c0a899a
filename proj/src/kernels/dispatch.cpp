#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bdia/kernels.hpp"

namespace bdia::kernels {

#ifndef BDIA_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef BDIA_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "neon") return Isa::kNeon;
  return std::nullopt;
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return &scalar_table();
    case Isa::kAvx2: return avx2_table();
    case Isa::kNeon: return neon_table();
  }
  return nullptr;
}

namespace {

const KernelTable* detect() {
  if (const char* forced = std::getenv("BDIA_ISA")) {
    if (auto isa = parse_isa(forced)) {
      if (const KernelTable* t = table_for(*isa)) return t;
    }
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{detect()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) {
    throw std::invalid_argument("kernel variant not available: " +
                                std::string(isa_name(isa)));
  }
  slot().store(t, std::memory_order_release);
}

}  // namespace bdia::kernels
