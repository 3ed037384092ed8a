#pragma once

#include <filesystem>
#include <span>

#include "minet/tensor.hpp"

// Single-channel images are [H,W] tensors with intensities nominally in [0,1].
namespace minet {

/// Throws ShapeError unless `image` is a non-empty [H,W] tensor.
void require_image(const Tensor& image, const char* op);

/// Stacks equally sized [H,W] images into a [B,1,H,W] batch.
Tensor stack_images(std::span<const Tensor* const> images);
/// Sample `index` of a [B,1,H,W] batch as an [H,W] image.
Tensor batch_image(const Tensor& batch, std::size_t index);

/// Binary 8-bit PGM (P5). Values are clamped to [0,1] and mapped to round(255 v).
void write_pgm(const std::filesystem::path& path, const Tensor& image);
/// Reads a binary 8-bit PGM back as v / 255.
Tensor read_pgm(const std::filesystem::path& path);

}  // namespace minet
