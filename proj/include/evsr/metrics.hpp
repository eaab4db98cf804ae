#pragma once

#include "evsr/tensor.hpp"

namespace evsr {

// Mean over elements of sqrt((pred - target)^2 + eps2). Never below sqrt(eps2),
// with equality exactly when the tensors match.
double charbonnier(const Tensor &pred, const Tensor &target, double eps2 = 1e-6);

// Luma plane of a (3, H, W) frame: BT.601 full-range 0.299 R + 0.587 G + 0.114 B.
Tensor luma(const Tensor &frame);

// Y-channel PSNR in dB for [0,1] frames: 10 log10(1 / MSE). Identical frames
// return +infinity (printed as "inf" by the CLI).
double psnr_y(const Tensor &pred, const Tensor &target);

// Y-channel single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1. Windows near borders truncate to the in-bounds
// taps with weights renormalized to sum 1, so small frames stay well-defined;
// the score is the mean over every pixel.
double ssim_y(const Tensor &pred, const Tensor &target);

} // namespace evsr
