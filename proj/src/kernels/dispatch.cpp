#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace bkf::kernels {

#if !(defined(__x86_64__) || defined(_M_X64))
namespace avx2 {
const KernelTable* table() noexcept { return nullptr; }
}  // namespace avx2
#endif

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2::table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_best() noexcept {
  if (const char* env = std::getenv("BKF_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(ErrorCode::InvalidParameter,
                "instruction set '" + std::string(to_string(isa)) + "' not supported on this CPU");
  }
  if (isa == Isa::Avx2) return *avx2::table();
  return scalar::table();
}

namespace {
std::atomic<const KernelTable*> g_active{nullptr};
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = &table_for(detect_best());
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select_isa(Isa isa) { g_active.store(&table_for(isa), std::memory_order_release); }

}  // namespace bkf::kernels
