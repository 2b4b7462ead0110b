#include <cstdlib>
#include <string_view>

#include "fairnorm/simd/kernels.hpp"

namespace fairnorm::simd {

#if defined(FAIRNORM_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(FAIRNORM_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &scalar_kernels();
    case Isa::avx2:
#if defined(FAIRNORM_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_kernels();
#endif
      return nullptr;
    case Isa::neon:
#if defined(FAIRNORM_HAVE_NEON)
      return &neon_kernels();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

namespace {

const KernelTable& select() noexcept {
  const char* env = std::getenv("FAIRNORM_SIMD");
  const std::string_view req = env ? env : "auto";
  if (req == "scalar") return scalar_kernels();
  if (req == "avx2" || req == "neon") {
    const KernelTable* t = kernels_for(req == "avx2" ? Isa::avx2 : Isa::neon);
    return t ? *t : scalar_kernels();
  }
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (const KernelTable* t = kernels_for(isa)) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace fairnorm::simd
