#include "minet/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "minet/binary_io.hpp"

namespace minet {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != element_count(shape_))
    throw ShapeError("tensor payload has " + std::to_string(data_.size()) + " elements but shape " +
                     shape_string(shape_) + " needs " + std::to_string(element_count(shape_)));
}

Tensor Tensor::uninitialized(Shape shape) {
  Tensor t;
  t.data_ = Storage(element_count(shape));
  t.shape_ = std::move(shape);
  return t;
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size())
    throw ShapeError("index rank " + std::to_string(index.size()) + " != tensor rank " + std::to_string(shape_.size()));
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape_[axis]) throw std::out_of_range("index out of range on axis " + std::to_string(axis));
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (element_count(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool Tensor::identical(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_tensor(std::ostream& out, const Tensor& tensor) {
  io::write_magic(out, "MNT1");
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.shape()) io::write_le<std::uint64_t>(out, d);
  for (double v : tensor.data()) io::write_le<double>(out, v);
  if (!out) throw std::runtime_error("failed writing MNT1 tensor");
}

Tensor read_tensor(std::istream& in) {
  io::expect_magic(in, "MNT1");
  const auto rank = io::read_le<std::uint32_t>(in, "MNT1 rank");
  if (rank > 16) throw FormatError("MNT1 rank " + std::to_string(rank) + " exceeds limit");
  Shape shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = io::read_le<std::uint64_t>(in, "MNT1 dims");
    if (d > (std::size_t{1} << 32)) throw FormatError("MNT1 dimension too large");
    count *= d;
    if (count > (std::size_t{1} << 32)) throw FormatError("MNT1 element count too large");
  }
  std::vector<double> data(count);
  for (auto& v : data) v = io::read_le<double>(in, "MNT1 payload");
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace minet
