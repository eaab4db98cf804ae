#pragma once

#include <string>

#include "evsr/tensor.hpp"

namespace evsr {

// Reads a PNG or binary portable pixmap/graymap into a (3, H, W) float tensor
// in [0,1]; grayscale files replicate into all three channels. Dispatch is by
// file magic, not extension.
Tensor read_image(const std::string &path);

// Writes a (3, H, W) [0,1] tensor; format chosen by extension (.png, .ppm).
// Values are clamped and quantized to 8 bits.
void write_image(const Tensor &frame, const std::string &path);

// Raw tensor dump (magic "TNS1"): u32 rank, u32 extents[rank], f32 payload (LE).
void save_tensor(const Tensor &tensor, const std::string &path);
Tensor load_tensor(const std::string &path);

} // namespace evsr
