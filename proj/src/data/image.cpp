#include "minet/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace minet {

void require_image(const Tensor& image, const char* op) {
  if (image.rank() != 2 || image.size() == 0)
    throw ShapeError(std::string(op) + ": expected a non-empty [H,W] image, got " + shape_string(image.shape()));
}

Tensor stack_images(std::span<const Tensor* const> images) {
  if (images.empty()) throw ShapeError("stack_images: no images");
  const Shape& first = images.front()->shape();
  require_image(*images.front(), "stack_images");
  Tensor out = Tensor::uninitialized({images.size(), 1, first[0], first[1]});
  const std::size_t plane = first[0] * first[1];
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b]->shape() != first)
      throw ShapeError("stack_images: " + shape_string(images[b]->shape()) + " differs from " + shape_string(first));
    std::copy_n(images[b]->raw(), plane, out.raw() + b * plane);
  }
  return out;
}

Tensor batch_image(const Tensor& batch, std::size_t index) {
  if (batch.rank() != 4 || batch.dim(1) != 1)
    throw ShapeError("batch_image: expected [B,1,H,W], got " + shape_string(batch.shape()));
  if (index >= batch.dim(0)) throw ShapeError("batch_image: index out of range");
  const std::size_t h = batch.dim(2), w = batch.dim(3);
  Tensor out = Tensor::uninitialized({h, w});
  std::copy_n(batch.raw() + index * h * w, h * w, out.raw());
  return out;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  require_image(image, "write_pgm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::isnan(image[i]) ? 0.0 : std::clamp(image[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(255.0 * v));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 255 || w == 0 || h == 0)
    throw FormatError(path.string() + ": not an 8-bit binary PGM");
  in.get();
  std::vector<unsigned char> bytes(w * h);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw FormatError(path.string() + ": truncated PGM payload");
  Tensor out = Tensor::uninitialized({h, w});
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

}  // namespace minet
