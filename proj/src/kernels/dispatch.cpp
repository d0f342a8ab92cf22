#include <cstdlib>
#include <string>

#include "qmet/errors.hpp"
#include "qmet/kernels.hpp"

namespace qmet::kernels {
namespace {

constexpr KernelTable kScalar{&scalar::axpy, &scalar::dot, &scalar::weighted_gram, Isa::scalar};
#if defined(QMET_HAVE_AVX2)
constexpr KernelTable kAvx2{&avx2::axpy, &avx2::dot, &avx2::weighted_gram, Isa::avx2};
#endif

bool cpu_has_avx2() {
#if defined(QMET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const char* env = std::getenv("QMET_SIMD");
  const std::string pin = env ? env : "";
  if (pin == "scalar") return kScalar;
  if (pin == "avx2") return table(Isa::avx2);
  return supported(Isa::avx2) ? table(Isa::avx2) : kScalar;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2: {
      static const bool ok = cpu_has_avx2();
      return ok;
    }
  }
  return false;
}

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw ConfigError("kernel ISA '" + std::string(name(isa)) + "' is not available on this CPU/build");
  }
#if defined(QMET_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() {
  static const KernelTable& t = resolve();
  return t;
}

}  // namespace qmet::kernels
