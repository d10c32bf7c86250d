#include <atomic>
#include <cstdlib>
#include <string_view>

#include "tables.hpp"

namespace kge::simd {
namespace {

bool cpu_supports_avx2() noexcept {
#if defined(KGE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* initial_choice() noexcept {
  const char* env = std::getenv("KGE_ISA");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
  if (const Kernels* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& active() noexcept {
  static std::atomic<const Kernels*> table{initial_choice()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const Kernels& scalar_kernels() noexcept { return detail::scalar_table(); }

const Kernels* avx2_kernels() noexcept {
#if defined(KGE_HAVE_AVX2)
  static const bool supported = cpu_supports_avx2();
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& kernels() noexcept { return *active().load(std::memory_order_acquire); }

bool select_isa(Isa isa) noexcept {
  const Kernels* k = isa == Isa::kScalar ? &scalar_kernels() : avx2_kernels();
  if (k == nullptr) return false;
  active().store(k, std::memory_order_release);
  return true;
}

}  // namespace kge::simd
