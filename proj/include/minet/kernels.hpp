#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Raw arithmetic kernels behind the differentiable ops. Every kernel has a
// scalar reference implementation; ISA variants are compiled in separate
// translation units and picked at runtime from CPU features. Variants agree
// with the reference to rounding (FMA and lane-wise summation reorder terms),
// so bit-exact reproducibility holds per selected ISA, not across ISAs.
namespace minet::kernels {

enum class Isa { scalar, avx2, avx512 };

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

/// Stride-1 valid correlation over an already padded input plane stack.
struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t kernel_height = 0;
  std::size_t kernel_width = 0;

  std::size_t out_height() const { return in_height - kernel_height + 1; }
  std::size_t out_width() const { return in_width - kernel_width + 1; }
};

struct KernelSet {
  Isa isa;

  // out[o,y,x] += sum_{c,ky,kx} weight[o,c,ky,kx] * in[c,y+ky,x+kx]
  void (*conv2d_valid)(const double* in, const double* weight, double* out, const ConvGeometry& g);
  // grad_weight[o,c,ky,kx] += sum_{y,x} grad_out[o,y,x] * in[c,y+ky,x+kx]
  void (*conv2d_weight_grad)(const double* in, const double* grad_out, double* grad_weight, const ConvGeometry& g);

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out += a * b
  void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
};

const KernelSet& scalar_kernels();

/// True when the variant was compiled in and the running CPU supports it.
bool supported(Isa isa);
std::vector<Isa> supported_isas();

/// Kernel table for a specific ISA; throws std::invalid_argument if unsupported.
const KernelSet& kernels_for(Isa isa);

/// Currently selected table. Defaults to the widest supported ISA, or to the
/// one named by the MINET_KERNELS environment variable.
const KernelSet& active();
void select(Isa isa);

/// RAII override of the active kernel set (tests, equivalence checks).
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace minet::kernels
