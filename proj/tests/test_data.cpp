#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "minet/data/degrade.hpp"
#include "minet/data/image.hpp"
#include "minet/data/phantom.hpp"
#include "minet/data/sample_io.hpp"
#include "minet/data/split.hpp"
#include "minet/ops.hpp"
#include "minet/train/metrics.hpp"

using namespace minet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("minet_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Maps every pixel to the id of its distinct value, in first-seen order.
std::vector<std::size_t> level_sets(const Tensor& img) {
  std::map<double, std::size_t> ids;
  std::vector<std::size_t> out;
  for (double v : img.data()) out.push_back(ids.emplace(v, ids.size()).first->second);
  return out;
}

double rms(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s / static_cast<double>(t.size()));
}

std::vector<double> histogram(const Tensor& img, std::size_t bins) {
  std::vector<double> h(bins, 1e-9);
  for (double v : img.data()) h[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))] += 1.0;
  double total = 0.0;
  for (double c : h) total += c;
  for (double& c : h) c /= total;
  return h;
}

}  // namespace

TEST_SUITE("phantom") {
  TEST_CASE("deterministic per seed, in range") {
    PhantomSpec spec;
    spec.seed = 42;
    const Phantom a = generate_phantom(spec), b = generate_phantom(spec);
    CHECK(a.x_t1.identical(b.x_t1));
    CHECK(a.x_t2.identical(b.x_t2));
    CHECK(a.labels.identical(b.labels));
    spec.seed = 43;
    CHECK_FALSE(generate_phantom(spec).x_t1.identical(a.x_t1));
    for (const Tensor* t : {&a.x_t1, &a.x_t2})
      for (double v : t->data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }

  TEST_CASE("both contrasts share the tissue geometry") {
    PhantomSpec spec;
    spec.bias_amplitude = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      spec.seed = seed;
      const Phantom p = generate_phantom(spec);
      const auto labels = level_sets(p.labels);
      CHECK(level_sets(p.x_t1) == labels);
      CHECK(level_sets(p.x_t2) == labels);
      CHECK(std::set<double>(p.labels.data().begin(), p.labels.data().end()).size() >= 4);
    }
  }

  TEST_CASE("contrast histograms differ") {
    PhantomSpec spec;
    spec.seed = 7;
    const Phantom p = generate_phantom(spec);
    const auto h1 = histogram(p.x_t1, 32), h2 = histogram(p.x_t2, 32);
    double kl = 0.0;
    for (std::size_t i = 0; i < h1.size(); ++i) kl += h1[i] * std::log(h1[i] / h2[i]);
    CHECK(kl > 0.05);
  }
}

TEST_SUITE("degrade") {
  TEST_CASE("constant images stay constant") {
    for (Degradation m : {Degradation::kspace_truncation, Degradation::bicubic_decimation})
      for (std::size_t r : {2u, 4u}) {
        const Tensor lr = degrade(Tensor({32, 32}, 0.37), r, m);
        CHECK(lr.shape() == Shape{32 / r, 32 / r});
        for (double v : lr.data()) CHECK(std::abs(v - 0.37) < 1e-12);
      }
    CHECK_THROWS_AS(degrade(Tensor({30, 30}), 4, Degradation::kspace_truncation), ShapeError);
  }

  TEST_CASE("r = 1 k-space truncation is the identity") {
    const Tensor img = test::random_tensor({16, 16}, 3, 0.0, 1.0);
    CHECK(max_abs_diff(degrade(img, 1, Degradation::kspace_truncation), img) < 1e-9);
  }

  TEST_CASE("a sinusoid below the cutoff survives truncation") {
    const std::size_t n = 32, r = 2, m = n / r;
    Tensor hr({n, n}), expect({m, m});
    auto f = [](double x, double y) {
      return 0.5 + 0.25 * std::cos(2 * std::numbers::pi * 3 * x / 32) + 0.15 * std::sin(2 * std::numbers::pi * 2 * y / 32);
    };
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) hr.at({y, x}) = f(double(x), double(y));
    // LR pixel i sits on HR coordinate r*i + (r-1)/2.
    for (std::size_t y = 0; y < m; ++y)
      for (std::size_t x = 0; x < m; ++x) expect.at({y, x}) = f(r * x + 0.5, r * y + 0.5);
    const Tensor lr = degrade(hr, r, Degradation::kspace_truncation);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
      err += (lr[i] - expect[i]) * (lr[i] - expect[i]);
      ref += expect[i] * expect[i];
    }
    CHECK(std::sqrt(err / ref) < 1e-6);
  }

  TEST_CASE("k-space truncation contracts per-pixel energy and is deterministic") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      PhantomSpec spec;
      spec.seed = seed;
      const Tensor hr = generate_phantom(spec).x_t2;
      for (std::size_t r : {2u, 4u}) {
        const Tensor lr = degrade(hr, r, Degradation::kspace_truncation);
        CHECK(rms(lr) <= rms(hr) + 1e-12);
        CHECK(lr.identical(degrade(hr, r, Degradation::kspace_truncation)));
      }
    }
  }

  TEST_CASE("bicubic upsampling") {
    const Tensor c = bicubic_upsample(Tensor({8, 8}, 0.6), 2);
    CHECK(c.shape() == Shape{16, 16});
    for (double v : c.data()) CHECK(std::abs(v - 0.6) < 1e-12);
    CHECK(bicubic_upsample(Tensor({5, 7}), 4).shape() == Shape{20, 28});

    // A bilinear ramp is reproduced wherever the taps stay inside the image.
    const std::size_t n = 12, r = 2;
    Tensor lr({n, n});
    auto ramp = [](double x, double y) { return 0.1 + 0.03 * x - 0.02 * y + 0.004 * x * y; };
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) lr.at({y, x}) = ramp(double(x), double(y));
    const Tensor up = bicubic_upsample(lr, r);
    for (std::size_t y = 4; y < r * n - 4; ++y)
      for (std::size_t x = 4; x < r * n - 4; ++x) {
        const double sx = (x + 0.5) / r - 0.5, sy = (y + 0.5) / r - 0.5;
        CHECK(std::abs(up.at({y, x}) - ramp(sx, sy)) < 1e-6);
      }
  }

  TEST_CASE("cubic kernel") {
    CHECK(cubic_kernel(0.0) == 1.0);
    CHECK(cubic_kernel(1.0) == 0.0);
    CHECK(cubic_kernel(2.0) == 0.0);
    CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
    CHECK(cubic_kernel(-1.5) == doctest::Approx(-0.0625));
    CHECK(parse_degradation("bicubic_decimation") == Degradation::bicubic_decimation);
    CHECK_THROWS_AS(parse_degradation("blur"), ConfigError);
  }
}

TEST_SUITE("split") {
  TEST_CASE("7:1:2 partition") {
    const DatasetSplit s = make_split(10, 3);
    CHECK(s.train.size() == 7);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 2);
    for (std::size_t total : {10u, 11u, 37u, 200u}) {
      const DatasetSplit d = make_split(total, 5);
      std::set<std::size_t> all;
      for (const auto* part : {&d.train, &d.val, &d.test}) all.insert(part->begin(), part->end());
      CHECK(all.size() == total);
      CHECK(d.train.size() + d.val.size() + d.test.size() == total);
      CHECK(*all.rbegin() == total - 1);
    }
    const DatasetSplit a = make_split(200, 9), b = make_split(200, 9);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(make_split(200, 9).train != make_split(200, 10).train);
    CHECK_THROWS(make_split(9, 0));
  }
}

TEST_SUITE("samples") {
  TEST_CASE("sample invariants") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const SamplePair s = make_sample(seed, 32, 2, Degradation::kspace_truncation);
      CHECK(s.y_t2.identical(degrade(s.x_t2, 2, Degradation::kspace_truncation)));
      CHECK(s.x_t1.shape() == Shape{32, 32});
      for (const Tensor* t : {&s.x_t1, &s.y_t2, &s.x_t2})
        for (double v : t->data()) CHECK((v >= 0.0 && v <= 1.0));
      const double db = psnr(bicubic_upsample(s.y_t2, 2), s.x_t2);
      CHECK(std::isfinite(db));
      CHECK(db > 5.0);
    }
  }

  TEST_CASE("save/load round trip and truncation") {
    const fs::path dir = scratch("sample");
    const SamplePair s = make_sample(12, 16, 2, Degradation::bicubic_decimation);
    save_sample(dir / "s.mnt1", s);
    const SamplePair back = load_sample(dir / "s.mnt1");
    CHECK(back.seed == 12);
    CHECK(back.x_t1.identical(s.x_t1));
    CHECK(back.y_t2.identical(s.y_t2));
    CHECK(back.x_t2.identical(s.x_t2));

    std::ifstream in(dir / "s.mnt1", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "cut.mnt1", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_sample(dir / "cut.mnt1"), FormatError);
    CHECK_THROWS(load_sample(dir / "missing.mnt1"));
  }

  TEST_CASE("PGM quantization") {
    const fs::path dir = scratch("pgm");
    write_pgm(dir / "half.pgm", Tensor({3, 5}, 0.5));
    const Tensor back = read_pgm(dir / "half.pgm");
    CHECK(back.shape() == Shape{3, 5});
    for (double v : back.data()) CHECK(std::abs(v * 255.0 - 128.0) <= 1.0);
    Tensor clamp({1, 2}, {-0.3, 1.7});
    write_pgm(dir / "clamp.pgm", clamp);
    CHECK(read_pgm(dir / "clamp.pgm").identical(Tensor({1, 2}, {0.0, 1.0})));
  }

  TEST_CASE("dataset on disk matches the in-memory dataset") {
    const fs::path dir = scratch("dataset");
    DatasetSpec spec{10, 16, 2, 100, Degradation::kspace_truncation};
    write_dataset(spec, dir);
    const Dataset mem = generate_dataset(spec), disk = load_dataset(dir);
    CHECK(disk.spec.count == 10);
    CHECK(disk.spec.seed == 100);
    for (const char* name : {"train", "val", "test"}) {
      REQUIRE(disk.split(name).size() == mem.split(name).size());
      for (std::size_t i = 0; i < mem.split(name).size(); ++i) {
        CHECK(disk.split(name)[i].seed == mem.split(name)[i].seed);
        CHECK(disk.split(name)[i].x_t2.identical(mem.split(name)[i].x_t2));
        CHECK(fs::exists(dir / name / (std::to_string(mem.split(name)[i].seed) + ".mnt1")));
      }
    }
    CHECK(mem.train.size() == 7);
    CHECK(mem.val.size() == 1);
    CHECK(mem.test.size() == 2);
    CHECK(fs::exists(dir / "preview"));
    CHECK_THROWS(load_dataset(dir / "nope"));
    CHECK_THROWS_AS(mem.split("holdout"), ConfigError);
  }
}
