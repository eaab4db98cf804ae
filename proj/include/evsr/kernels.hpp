#pragma once

#include "evsr/tensor.hpp"

#include <vector>

namespace evsr {

// Dense kernels shared by every stage of the pipeline. All kernels are pure
// functions of their inputs and verify output finiteness before returning.
//
// Ledger convention (multiply-adds, a function of shapes only):
//   conv2d / conv3d   out_elems * Cin * prod(kernel extents)
//   deform_conv2d     out_elems * Cin * kh * kw * 5   (4 per bilinear fetch + 1 accumulate)
//   matmul / linear   m * n * k
//   softmax           2 per element (exp + renormalize)
//   activations       1 per element
//   sample_bilinear   4; sample_trilinear3d 8 per channel
//   resize_bilinear   4 per output element; resize_bicubic 8 (two separable passes)
//   channel_attention pool + both gate layers + per-element scale

// input (N, Cin, H, W), weights (Cout, Cin, kh, kw), bias (Cout) or empty.
Tensor conv2d(const Tensor &input, const Tensor &weights, const Tensor &bias, int stride, int padding,
              OpLedger *ledger = nullptr);

// input (T, Cin, H, W), weights (Cout, Cin, kt, kh, kw); convolves over (T, H, W).
Tensor conv3d(const Tensor &input, const Tensor &weights, const Tensor &bias, int stride, int padding,
              OpLedger *ledger = nullptr);

// a (m, k) x b (k, n) -> (m, n).
Tensor matmul(const Tensor &a, const Tensor &b, OpLedger *ledger = nullptr);

// row vector (in) through weights (out, in) + bias (out) -> (out).
std::vector<float> linear(const std::vector<float> &input, const Tensor &weights, const Tensor &bias,
                          OpLedger *ledger = nullptr);

// Softmax along the last axis, max-subtracted for stability.
Tensor softmax_lastdim(const Tensor &input, OpLedger *ledger = nullptr);

Tensor leaky_relu(const Tensor &input, float slope = 0.1f, OpLedger *ledger = nullptr);
Tensor gelu(const Tensor &input, OpLedger *ledger = nullptr);
float gelu_scalar(float x);
float sigmoid_scalar(float x);

// Bilinear read of one (time, channel) plane at fractional pixel indices
// (y, x); coordinates outside the grid contribute zeros.
float sample_bilinear(const Tensor &input, int time, int channel, double y, double x, OpLedger *ledger = nullptr);

// Trilinear read of a feature sequence (T, C, H, W) returning all channels.
// t_idx / y / x are fractional lattice indices (t_idx in [0, T-1]; spatial
// reads outside the grid contribute zeros; a length-1 time axis degenerates
// to bilinear).
std::vector<float> sample_trilinear3d(const Tensor &sequence, double t_idx, double y, double x,
                                      OpLedger *ledger = nullptr);

// Per-channel gate: global average pool -> linear (C -> C/reduction) -> leaky
// relu -> linear (C/reduction -> C) -> sigmoid, scaling the input channels.
// input (C, H, W) or (N, C, H, W) applied per leading slice.
Tensor channel_attention(const Tensor &input, const Tensor &fc0_w, const Tensor &fc0_b, const Tensor &fc1_w,
                         const Tensor &fc1_b, OpLedger *ledger = nullptr);

// 3x3 deformable convolution, one offset group, no modulation mask.
// input (N, Cin, H, W), weights (Cout, Cin, 3, 3), offsets (N, 18, H, W)
// ordered (dy, dx) per kernel tap in row-major tap order. Samples bilinearly
// with zero padding outside the grid; stride 1, padding 1.
Tensor deform_conv2d(const Tensor &input, const Tensor &weights, const Tensor &bias, const Tensor &offsets,
                     OpLedger *ledger = nullptr);

// Bilinear resize with half-pixel centers and edge clamping. input (H, W) or
// (C, H, W); resizes the trailing two axes.
Tensor resize_bilinear(const Tensor &input, int out_h, int out_w, OpLedger *ledger = nullptr);

// Catmull-Rom bicubic resize, same coordinate convention as resize_bilinear.
Tensor resize_bicubic(const Tensor &input, int out_h, int out_w, OpLedger *ledger = nullptr);

} // namespace evsr
