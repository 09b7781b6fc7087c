#include <atomic>
#include <cstdlib>
#include <string>

#include "impl.hpp"
#include "segreg/errors.hpp"

namespace segreg::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("SEGREG_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && supported(Isa::avx2)) return Isa::avx2;
  }
  return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SEGREG_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(SEGREG_HAVE_AVX2_TU)
  if (isa == Isa::avx2 && supported(Isa::avx2)) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!supported(isa)) {
    throw InvalidConfig("instruction set not supported on this CPU: " +
                        std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace segreg::kernels
