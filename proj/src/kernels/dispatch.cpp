#include <atomic>
#include <cstdlib>
#include <string_view>

#include "saflab/kernels.hpp"

namespace saflab::kernels {

#ifndef SAFLAB_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SAFLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("SAFLAB_SIMD"); env && std::string_view(env) == "scalar")
    return &scalar_table();
  if (cpu_supports(Isa::avx2) && avx2_table() != nullptr) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* t = nullptr;
  if (isa == Isa::scalar) t = &scalar_table();
  if (isa == Isa::avx2 && cpu_supports(Isa::avx2)) t = avx2_table();
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace saflab::kernels
