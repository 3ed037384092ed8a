#include <doctest.h>

#include <cmath>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "helpers.hpp"
#include "minet/gradcheck.hpp"
#include "minet/ops.hpp"

using namespace minet;
using test::random_tensor;

namespace {

// Worst relative error over all leaves of `fn` at the given inputs.
double grad_error(const ScalarFunction& fn, std::vector<NamedTensor> inputs) {
  return check_gradients(fn, inputs).max_rel_error();
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape bookkeeping") {
    Tensor t({2, 3, 4}, 1.5);
    CHECK(t.size() == 24);
    CHECK(element_count({}) == 1);
    CHECK(Tensor::scalar(2.0).item() == 2.0);
    t.at({1, 2, 3}) = 7.0;
    CHECK(t[23] == 7.0);
    CHECK_THROWS_AS(t.at({2, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
    CHECK_THROWS_AS((void)t.reshaped({5, 5}), ShapeError);
  }

  TEST_CASE("identical distinguishes signed zeros") {
    Tensor a({2}, 0.0), b({2}, 0.0);
    CHECK(a.identical(b));
    b[1] = -0.0;
    CHECK_FALSE(a.identical(b));
  }

  TEST_CASE("MNT1 round trip and truncation") {
    const Tensor t = random_tensor({3, 1, 4}, 9);
    std::stringstream s;
    write_tensor(s, t);
    const std::string bytes = s.str();
    CHECK(bytes.substr(0, 4) == "MNT1");
    CHECK(bytes.size() == 4 + 4 + 3 * 8 + 12 * 8);
    std::stringstream in(bytes);
    CHECK(read_tensor(in).identical(t));
    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_tensor(cut), FormatError);
    std::stringstream bad("MNT2" + bytes.substr(4));
    CHECK_THROWS_AS(read_tensor(bad), FormatError);
  }

#if defined(__GLIBC__)
  // The test main tunes the allocator, so even a 64 MB buffer comes from the heap.
  TEST_CASE("large tensors are not mmapped") {
    const Tensor big({8u << 20}, 1.0);
    CHECK(mallinfo2().hblks == 0);
  }
#endif
}

TEST_SUITE("conv") {
  TEST_CASE("box sum with padding") {
    Tape tape;
    Var y = conv2d(tape.constant(Tensor({1, 1, 3, 3}, 1.0)), tape.constant(Tensor({1, 1, 3, 3}, 1.0)),
                   tape.constant(Tensor({1}, 0.0)), 1, 1);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    CHECK(y.value().at({0, 0, 1, 1}) == 9.0);
    for (auto [r, c] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) CHECK(y.value().at({0, 0, std::size_t(r), std::size_t(c)}) == 4.0);
    CHECK(y.value().at({0, 0, 0, 1}) == 6.0);
  }

  TEST_CASE("identity 1x1 kernel") {
    Tape tape;
    const Tensor x = random_tensor({2, 1, 5, 7}, 1);
    Var y = conv2d(tape.constant(x), tape.constant(Tensor({1, 1, 1, 1}, 1.0)), tape.constant(Tensor({1})));
    CHECK(y.value().identical(x));
  }

  TEST_CASE("output size law with stride") {
    Tape tape;
    Var y = conv2d(tape.constant(Tensor({1, 2, 9, 8})), tape.constant(Tensor({3, 2, 3, 3})),
                   tape.constant(Tensor({3})), 2, 1);
    CHECK(y.shape() == Shape{1, 3, 5, 4});
  }

  TEST_CASE("shape errors are descriptive") {
    Tape tape;
    CHECK_THROWS_AS(conv2d(tape.constant(Tensor({1, 2, 4, 4})), tape.constant(Tensor({3, 1, 3, 3})),
                           tape.constant(Tensor({3}))),
                    ShapeError);
    CHECK_THROWS_AS(conv2d(tape.constant(Tensor({1, 1, 2, 2})), tape.constant(Tensor({1, 1, 3, 3})),
                           tape.constant(Tensor({1}))),
                    ShapeError);
  }

  TEST_CASE("conv2d gradient on 2x3x8x8 input with 4x3x3x3 weight") {
    auto fn = [](Tape&, std::span<const Var> v) {
      return weighted_sum(conv2d(v[0], v[1], v[2], 1, 1), random_tensor({2, 4, 8, 8}, 77));
    };
    CHECK(grad_error(fn, {{"x", random_tensor({2, 3, 8, 8}, 1)},
                          {"w", random_tensor({4, 3, 3, 3}, 2)},
                          {"b", random_tensor({4}, 3)}}) < 1e-4);
  }

  TEST_CASE("conv3d identity and box sum") {
    Tape tape;
    const Tensor x = random_tensor({1, 1, 4, 5, 6}, 4);
    Tensor w({1, 1, 1, 1, 1}, 1.0);
    Var y = conv3d(tape.constant(x), tape.constant(w), tape.constant(Tensor({1})), {0, 0, 0});
    CHECK(y.value().identical(x));

    const double c = 0.75;
    Var z = conv3d(tape.constant(Tensor({1, 1, 5, 5, 5}, c)), tape.constant(Tensor({1, 1, 3, 3, 3}, 1.0)),
                   tape.constant(Tensor({1})), {1, 1, 1});
    CHECK(z.value().at({0, 0, 2, 2, 2}) == doctest::Approx(27 * c).epsilon(1e-15));
    CHECK(z.value().at({0, 0, 0, 0, 0}) == doctest::Approx(8 * c).epsilon(1e-15));
  }

  TEST_CASE("conv3d rejects padding that changes the shape") {
    Tape tape;
    CHECK_THROWS_AS(conv3d(tape.constant(Tensor({1, 1, 4, 4, 4})), tape.constant(Tensor({1, 1, 3, 3, 3})),
                           tape.constant(Tensor({1})), {0, 1, 1}),
                    ConfigError);
  }

  TEST_CASE("conv3d gradient") {
    auto fn = [](Tape&, std::span<const Var> v) {
      return weighted_sum(conv3d(v[0], v[1], v[2], {1, 1, 1}), random_tensor({2, 1, 3, 4, 5}, 5));
    };
    CHECK(grad_error(fn, {{"x", random_tensor({2, 1, 3, 4, 5}, 6)},
                          {"w", random_tensor({1, 1, 3, 3, 3}, 7)},
                          {"b", random_tensor({1}, 8)}}) < 1e-4);
  }
}

TEST_SUITE("linalg") {
  TEST_CASE("matmul examples") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    Var y = matmul(a, tape.constant(Tensor({2, 1}, {1, 1})));
    CHECK(y.value().identical(Tensor({2, 1}, {3, 7})));
    const Tensor m = random_tensor({3, 4}, 1);
    Var id = tape.constant(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    CHECK(matmul(id, tape.constant(m)).value().identical(m));
    CHECK_THROWS_AS(matmul(a, tape.constant(Tensor({3, 1}))), ShapeError);
  }

  TEST_CASE("matmul gradient on 4x5 by 5x3") {
    auto fn = [](Tape&, std::span<const Var> v) { return weighted_sum(matmul(v[0], v[1]), random_tensor({4, 3}, 3)); };
    CHECK(grad_error(fn, {{"a", random_tensor({4, 5}, 1)}, {"b", random_tensor({5, 3}, 2)}}) < 1e-4);
  }

  TEST_CASE("matmul_nt equals matmul against the transpose") {
    Tape tape;
    Var a = tape.constant(random_tensor({2, 3, 5}, 1)), b = tape.constant(random_tensor({2, 4, 5}, 2));
    const Tensor direct = matmul_nt(a, b).value();
    const Tensor via = matmul(a, transpose(b, {0, 2, 1})).value();
    CHECK(max_abs_diff(direct, via) < 1e-15);
  }

  TEST_CASE("softmax rows") {
    Tape tape;
    Var c = softmax_rows(tape.constant(Tensor({1, 4}, 3.0)));
    for (double v : c.value().data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    Var p = softmax_rows(tape.constant(Tensor({1, 2}, {0.0, std::log(3.0)})));
    CHECK(std::abs(p.value()[0] - 0.25) < 1e-15);
    CHECK(std::abs(p.value()[1] - 0.75) < 1e-15);

    const Tensor x = random_tensor({5, 7}, 3);
    Tensor shifted = x;
    for (auto& v : shifted.data()) v += 1000.0;
    const Tensor a = softmax_rows(tape.constant(x)).value(), b = softmax_rows(tape.constant(shifted)).value();
    CHECK(max_abs_diff(a, b) < 1e-12);
    for (std::size_t r = 0; r < 5; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        CHECK(a[r * 7 + j] >= 0.0);
        CHECK(a[r * 7 + j] <= 1.0);
        total += a[r * 7 + j];
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_SUITE("shape ops") {
  TEST_CASE("pixel shuffle laws") {
    Tape tape;
    const Tensor x = random_tensor({1, 4, 2, 2}, 1);
    CHECK(pixel_shuffle(x, 1).identical(x));
    const Tensor y = pixel_shuffle(x, 2);
    CHECK(y.shape() == Shape{1, 1, 4, 4});
    CHECK(y.at({0, 0, 1, 3}) == x.at({0, 3, 0, 1}));
    CHECK(pixel_unshuffle(y, 2).identical(x));
    CHECK_THROWS_AS(pixel_shuffle(Tensor({1, 3, 2, 2}), 2), ShapeError);
  }

  TEST_CASE("pixel shuffle gradient is the inverse rearrangement") {
    Tape tape;
    Var x = tape.leaf(random_tensor({2, 8, 3, 3}, 2), true);
    const Tensor w = random_tensor({2, 2, 6, 6}, 3);
    tape.backward(weighted_sum(pixel_shuffle(x, 2), w));
    CHECK(tape.grad(x).identical(pixel_unshuffle(w, 2)));
  }

  TEST_CASE("concat") {
    Tape tape;
    Var a = tape.leaf(random_tensor({1, 2, 4, 4}, 1), true);
    Var b = tape.leaf(random_tensor({1, 2, 4, 4}, 2), true);
    CHECK(concat({a}, 1).value().identical(a.value()));
    Var c = concat({a, b}, 1);
    CHECK(c.shape() == Shape{1, 4, 4, 4});
    tape.backward(sum(c));
    CHECK(tape.grad(a).identical(Tensor({1, 2, 4, 4}, 1.0)));
    CHECK_THROWS_AS(concat({a, tape.constant(Tensor({1, 2, 3, 4}))}, 1), ShapeError);
  }

  TEST_CASE("reshape and transpose round trips") {
    Tape tape;
    const Tensor x = random_tensor({2, 3}, 1);
    CHECK(reshape(reshape(tape.constant(x), {3, 2}), {2, 3}).value().identical(x));
    const Tensor y = random_tensor({2, 3, 4}, 2);
    Var t = transpose(transpose(tape.constant(y), {2, 0, 1}), {1, 2, 0});
    CHECK(t.value().identical(y));
    CHECK_THROWS_AS(reshape(tape.constant(x), {4, 2}), ShapeError);
    CHECK_THROWS_AS(transpose(tape.constant(y), {0, 0, 1}), ShapeError);
  }

  TEST_CASE("gradient through reshape and matmul") {
    auto fn = [](Tape&, std::span<const Var> v) {
      return weighted_sum(matmul(reshape(v[0], {3, 4}), transpose(v[1], {1, 0})), random_tensor({3, 2}, 9));
    };
    CHECK(grad_error(fn, {{"a", random_tensor({2, 6}, 1)}, {"b", random_tensor({2, 4}, 2)}}) < 1e-4);
  }

  TEST_CASE("global average pool") {
    Tape tape;
    Var g = global_avg_pool(tape.constant(Tensor({2, 3, 4, 5}, 0.3)));
    CHECK(g.shape() == Shape{2, 3, 1, 1});
    for (double v : g.value().data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
    const Tensor px = random_tensor({2, 3, 1, 1}, 4);
    CHECK(global_avg_pool(tape.constant(px)).value().identical(px));
    auto fn = [](Tape&, std::span<const Var> v) {
      return weighted_sum(global_avg_pool(v[0]), random_tensor({2, 3, 1, 1}, 5));
    };
    CHECK(grad_error(fn, {{"x", random_tensor({2, 3, 4, 5}, 6)}}) < 1e-4);
  }
}

TEST_SUITE("elementwise") {
  TEST_CASE("pointwise examples") {
    Tape tape;
    CHECK(sigmoid(tape.constant(Tensor({1}, 0.0))).value()[0] == 0.5);
    Var big = sigmoid(tape.constant(Tensor({2}, {1e6, -1e6})));
    CHECK(big.value().all_finite());
    CHECK(big.value()[0] > 1.0 - 1e-15);
    const Tensor x = random_tensor({3, 4}, 1);
    CHECK(add(tape.constant(x), tape.constant(Tensor({3, 4}))).value().identical(x));
    CHECK_THROWS_AS(add(tape.constant(x), tape.constant(Tensor({4, 3}))), ShapeError);
    Var r = relu(tape.constant(Tensor({3}, {-1.0, 0.0, 2.0})));
    CHECK(r.value().identical(Tensor({3}, {0.0, 0.0, 2.0})));
  }

  TEST_CASE("sigmoid(a) * b + b gradient") {
    auto fn = [](Tape&, std::span<const Var> v) {
      return weighted_sum(add(mul(sigmoid(v[0]), v[1]), v[1]), random_tensor({3, 5}, 3));
    };
    CHECK(grad_error(fn, {{"a", random_tensor({3, 5}, 1)}, {"b", random_tensor({3, 5}, 2)}}) < 1e-4);
  }

  TEST_CASE("gated residual at zero gate is an exact identity") {
    Tape tape;
    const Tensor x = random_tensor({2, 3, 4, 4}, 1);
    Var y = gated_mul_residual(tape.constant(Tensor({1}, 0.0)), tape.constant(random_tensor({2, 1, 3, 4, 4}, 2)),
                               tape.constant(x));
    CHECK(y.value().identical(x));
    Var half = gated_mul_residual(tape.constant(Tensor({1}, 1.0)), tape.constant(Tensor({2, 3, 4, 4}, 0.5)),
                                  tape.constant(x));
    Tensor expect = x;
    for (auto& v : expect.data()) v *= 1.5;
    CHECK(max_abs_diff(half.value(), expect) == 0.0);
  }
}

TEST_SUITE("losses and backward") {
  TEST_CASE("l1 examples") {
    Tape tape;
    const Tensor x = random_tensor({4}, 1);
    CHECK(l1_loss(tape.constant(x), tape.constant(x)).value().item() == 0.0);
    CHECK(l1_loss(tape.constant(Tensor({2}, {1, 3})), tape.constant(Tensor({2}))).value().item() == 2.0);
  }

  TEST_CASE("l1 gradient is sign over count, zero at ties") {
    Tape tape;
    Var p = tape.leaf(Tensor({4}, {1.0, -2.0, 0.5, 3.0}), true);
    tape.backward(l1_loss(p, tape.constant(Tensor({4}, {0.0, 0.0, 0.5, 4.0}))));
    CHECK(tape.grad(p).identical(Tensor({4}, {0.25, -0.25, 0.0, -0.25})));
  }

  TEST_CASE("backward of sum gives ones; non-scalar root and second backward throw") {
    Tape tape;
    Var x = tape.leaf(random_tensor({2, 3}, 1), true);
    Var s = sum(x);
    CHECK_THROWS_AS(tape.backward(x), std::logic_error);
    tape.backward(s);
    CHECK(tape.grad(x).identical(Tensor({2, 3}, 1.0)));
    CHECK_THROWS_AS(tape.backward(s), std::logic_error);
    tape.zero_grad();
    tape.backward(s);
    CHECK(tape.grad(x).identical(Tensor({2, 3}, 1.0)));
  }

  TEST_CASE("l1(Wx, t) gradient on W") {
    const Tensor x = random_tensor({4, 3}, 2), t = random_tensor({5, 3}, 3);
    auto fn = [&](Tape& tape, std::span<const Var> v) { return l1_loss(matmul(v[0], tape.constant(x)), tape.constant(t)); };
    CHECK(grad_error(fn, {{"W", random_tensor({5, 4}, 1)}}) < 1e-4);
  }

  TEST_CASE("replay is bit-identical") {
    auto run = [] {
      Tape tape;
      Var x = tape.leaf(random_tensor({1, 2, 6, 6}, 1), true);
      Var w = tape.leaf(random_tensor({3, 2, 3, 3}, 2), true);
      Var y = relu(conv2d(x, w, tape.constant(Tensor({3})), 1, 1));
      Var loss = mean(softmax_rows(reshape(y, {3, 36})));
      tape.backward(add(loss, sum(y)));
      return std::pair{tape.grad(x), tape.grad(w)};
    };
    const auto a = run(), b = run();
    CHECK(a.first.identical(b.first));
    CHECK(a.second.identical(b.second));
  }

  TEST_CASE("finite checks reject NaN when enabled") {
    Tape tape;
    tape.set_check_finite(true);
    Var x = tape.constant(Tensor({1}, std::nan("")));
    CHECK_THROWS_AS(scale(x, 2.0), NumericalError);
  }
}
