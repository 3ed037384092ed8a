#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "minet/kernels.hpp"
#include "minet/ops.hpp"

using namespace minet;
namespace k = minet::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  const Tensor t = test::random_tensor({n}, seed);
  return {t.data().begin(), t.data().end()};
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / (std::abs(a[i]) + 1e-12));
  return worst;
}

}  // namespace

TEST_CASE("scalar kernels are always available and named") {
  CHECK(k::supported(k::Isa::scalar));
  CHECK(k::parse_isa(k::isa_name(k::Isa::avx2)) == k::Isa::avx2);
  CHECK_THROWS(k::parse_isa("sse9"));
}

TEST_CASE("every supported ISA matches the scalar reference") {
  const auto& ref = k::scalar_kernels();
  for (k::Isa isa : k::supported_isas()) {
    CAPTURE(k::isa_name(isa));
    const auto& ks = k::kernels_for(isa);
    // Lengths straddle every vector width and remainder path.
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 33u, 100u, 257u}) {
      CAPTURE(n);
      const auto a = random_vec(n, 10 + n), b = random_vec(n, 20 + n);
      const double d_ref = ref.dot(a.data(), b.data(), n), d = ks.dot(a.data(), b.data(), n);
      CHECK(std::abs(d - d_ref) <= 1e-13 * (1.0 + std::abs(d_ref)) * (1.0 + static_cast<double>(n)));

      auto y_ref = random_vec(n, 30 + n), y = y_ref;
      ref.axpy(0.37, a.data(), y_ref.data(), n);
      ks.axpy(0.37, a.data(), y.data(), n);
      CHECK(rel_diff(y_ref, y) < 1e-14);

      std::vector<double> m_ref(n), m(n);
      ref.mul(a.data(), b.data(), m_ref.data(), n);
      ks.mul(a.data(), b.data(), m.data(), n);
      CHECK(m == m_ref);

      auto acc_ref = random_vec(n, 40 + n), acc = acc_ref;
      ref.mul_acc(a.data(), b.data(), acc_ref.data(), n);
      ks.mul_acc(a.data(), b.data(), acc.data(), n);
      // A fused multiply-add rounds once where the reference rounds twice.
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(acc[i] - acc_ref[i]));
      CHECK(worst <= 4e-16);
    }
  }
}

TEST_CASE("convolution kernels agree across ISAs on awkward geometries") {
  const auto& ref = k::scalar_kernels();
  for (k::Isa isa : k::supported_isas()) {
    CAPTURE(k::isa_name(isa));
    const auto& ks = k::kernels_for(isa);
    const k::ConvGeometry geoms[] = {
        {1, 1, 3, 3, 3, 3}, {2, 3, 10, 13, 3, 3}, {3, 2, 7, 21, 1, 1}, {4, 4, 18, 18, 3, 3}, {2, 5, 5, 40, 2, 3}};
    std::uint64_t seed = 100;
    for (const auto& g : geoms) {
      const std::size_t in_n = g.in_channels * g.in_height * g.in_width;
      const std::size_t w_n = g.out_channels * g.in_channels * g.kernel_height * g.kernel_width;
      const std::size_t out_n = g.out_channels * g.out_height() * g.out_width();
      const auto in = random_vec(in_n, ++seed), w = random_vec(w_n, ++seed), go = random_vec(out_n, ++seed);

      auto out_ref = random_vec(out_n, ++seed), out = out_ref;
      ref.conv2d_valid(in.data(), w.data(), out_ref.data(), g);
      ks.conv2d_valid(in.data(), w.data(), out.data(), g);
      double worst = 0.0;
      for (std::size_t i = 0; i < out_n; ++i) worst = std::max(worst, std::abs(out[i] - out_ref[i]));
      CHECK(worst < 1e-12);

      auto gw_ref = random_vec(w_n, ++seed), gw = gw_ref;
      ref.conv2d_weight_grad(in.data(), go.data(), gw_ref.data(), g);
      ks.conv2d_weight_grad(in.data(), go.data(), gw.data(), g);
      worst = 0.0;
      for (std::size_t i = 0; i < w_n; ++i) worst = std::max(worst, std::abs(gw[i] - gw_ref[i]));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("ops give the same results under every ISA") {
  const Tensor x = test::random_tensor({2, 3, 9, 11}, 1), w = test::random_tensor({4, 3, 3, 3}, 2),
               b = test::random_tensor({4}, 3);
  auto run = [&](k::Isa isa) {
    k::ScopedIsa scope(isa);
    Tape tape;
    Var xv = tape.leaf(x, true), wv = tape.leaf(w, true), bv = tape.leaf(b, true);
    Var y = conv2d(xv, wv, bv, 1, 1);
    Var s = softmax_rows(matmul_nt(reshape(y, {2, 4 * 99}), reshape(y, {2, 4 * 99})));
    tape.backward(add(sum(y), sum(s)));
    return std::pair{y.value(), tape.grad(wv)};
  };
  const auto [y_ref, gw_ref] = run(k::Isa::scalar);
  for (k::Isa isa : k::supported_isas()) {
    const auto [y, gw] = run(isa);
    CHECK(max_abs_diff(y, y_ref) < 1e-12);
    CHECK(max_abs_diff(gw, gw_ref) < 1e-10);
  }
}

TEST_CASE("ScopedIsa restores the previous selection") {
  const k::Isa before = k::active().isa;
  {
    k::ScopedIsa scope(k::Isa::scalar);
    CHECK(k::active().isa == k::Isa::scalar);
  }
  CHECK(k::active().isa == before);
}
