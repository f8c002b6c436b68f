#include <atomic>
#include <cstdlib>
#include <string>

#include "plume/simd/kernels.hpp"

namespace plume::simd {

#if defined(PLUME_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif
#if defined(PLUME_HAVE_NEON)
const KernelTable& neon_table_impl();
#endif

const KernelTable* avx2_kernels() {
#if defined(PLUME_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(PLUME_HAVE_NEON)
  return &neon_table_impl();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* best_available() {
  if (const auto* t = avx2_kernels()) return t;
  if (const auto* t = neon_kernels()) return t;
  return &scalar_kernels();
}

const KernelTable* initial_selection() {
  const char* env = std::getenv("PLUME_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return &scalar_kernels();
  if (choice == "avx2" && avx2_kernels()) return avx2_kernels();
  if (choice == "neon" && neon_kernels()) return neon_kernels();
  return best_available();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_selection()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::scalar: t = &scalar_kernels(); break;
    case Isa::avx2: t = avx2_kernels(); break;
    case Isa::neon: t = neon_kernels(); break;
  }
  if (!t) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

}  // namespace plume::simd
