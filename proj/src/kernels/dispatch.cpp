#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "minet/kernels.hpp"

namespace minet::kernels {

#if MINET_HAVE_X86_SIMD
const KernelSet& avx2_kernels();
const KernelSet& avx512_kernels();
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "avx512") return Isa::avx512;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "' (expected scalar, avx2 or avx512)");
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
#if MINET_HAVE_X86_SIMD
    case Isa::avx2: return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::avx512: return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
#else
    case Isa::avx2:
    case Isa::avx512: return false;
#endif
  }
  return false;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512})
    if (supported(isa)) out.push_back(isa);
  return out;
}

const KernelSet& kernels_for(Isa isa) {
  if (!supported(isa)) throw std::invalid_argument("kernel ISA " + std::string(isa_name(isa)) + " is not available");
  switch (isa) {
#if MINET_HAVE_X86_SIMD
    case Isa::avx2: return avx2_kernels();
    case Isa::avx512: return avx512_kernels();
#endif
    default: return scalar_kernels();
  }
}

namespace {

const KernelSet* initial_selection() {
  if (const char* env = std::getenv("MINET_KERNELS"); env && *env) return &kernels_for(parse_isa(env));
  auto isas = supported_isas();
  return &kernels_for(isas.back());
}

std::atomic<const KernelSet*>& slot() {
  static std::atomic<const KernelSet*> current{initial_selection()};
  return current;
}

}  // namespace

const KernelSet& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) { slot().store(&kernels_for(isa), std::memory_order_release); }

ScopedIsa::ScopedIsa(Isa isa) : previous_(active().isa) { select(isa); }
ScopedIsa::~ScopedIsa() { select(previous_); }

}  // namespace minet::kernels
