#include "evsr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evsr {

namespace {

void require(bool ok, const std::string &msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_finite(const char *kernel, const Tensor &t) {
    if (!t.all_finite()) throw std::runtime_error(std::string(kernel) + ": non-finite output");
}

int conv_extent(int in, int k, int stride, int padding) { return (in + 2 * padding - k) / stride + 1; }

} // namespace

Tensor conv2d(const Tensor &input, const Tensor &weights, const Tensor &bias, int stride, int padding,
              OpLedger *ledger) {
    require(input.rank() == 4, "conv2d: input must be rank 4, got " + input.shape_string());
    require(weights.rank() == 4, "conv2d: weights must be rank 4, got " + weights.shape_string());
    require(stride >= 1, "conv2d: stride must be >= 1");
    const int n = input.extent(0), cin = input.extent(1), h = input.extent(2), w = input.extent(3);
    const int cout = weights.extent(0), kh = weights.extent(2), kw = weights.extent(3);
    require(weights.extent(1) == cin, "conv2d: channel mismatch between input " + input.shape_string() +
                                          " and weights " + weights.shape_string());
    require(bias.numel() == 0 || (bias.rank() == 1 && bias.extent(0) == cout),
            "conv2d: bias shape " + bias.shape_string() + " does not match " + std::to_string(cout) + " filters");
    const int oh = conv_extent(h, kh, stride, padding), ow = conv_extent(w, kw, stride, padding);
    require(oh >= 1 && ow >= 1, "conv2d: output would be empty for input " + input.shape_string());

    Tensor out({n, cout, oh, ow});
    const bool has_bias = bias.numel() > 0;
    for (int b = 0; b < n; ++b)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = has_bias ? bias[co] : 0.0;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = oy * stride - padding + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ix = ox * stride - padding + kx;
                                if (ix < 0 || ix >= w) continue;
                                acc += static_cast<double>(input.at(b, ci, iy, ix)) * weights.at(co, ci, ky, kx);
                            }
                        }
                    out.at(b, co, oy, ox) = static_cast<float>(acc);
                }
    if (ledger)
        ledger->add("conv2d", static_cast<std::uint64_t>(out.numel()) * cin * kh * kw);
    check_finite("conv2d", out);
    return out;
}

Tensor conv3d(const Tensor &input, const Tensor &weights, const Tensor &bias, int stride, int padding,
              OpLedger *ledger) {
    require(input.rank() == 4, "conv3d: input must be rank 4 (T,C,H,W), got " + input.shape_string());
    require(weights.rank() == 5, "conv3d: weights must be rank 5, got " + weights.shape_string());
    require(stride >= 1, "conv3d: stride must be >= 1");
    const int t = input.extent(0), cin = input.extent(1), h = input.extent(2), w = input.extent(3);
    const int cout = weights.extent(0), kt = weights.extent(2), kh = weights.extent(3), kw = weights.extent(4);
    require(weights.extent(1) == cin, "conv3d: channel mismatch between input " + input.shape_string() +
                                          " and weights " + weights.shape_string());
    require(bias.numel() == 0 || (bias.rank() == 1 && bias.extent(0) == cout),
            "conv3d: bias shape " + bias.shape_string() + " does not match " + std::to_string(cout) + " filters");
    const int ot = conv_extent(t, kt, stride, padding);
    const int oh = conv_extent(h, kh, stride, padding), ow = conv_extent(w, kw, stride, padding);
    require(ot >= 1 && oh >= 1 && ow >= 1, "conv3d: output would be empty for input " + input.shape_string());

    Tensor out({ot, cout, oh, ow});
    const bool has_bias = bias.numel() > 0;
    for (int o = 0; o < ot; ++o)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = has_bias ? bias[co] : 0.0;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int dt = 0; dt < kt; ++dt) {
                            const int it = o * stride - padding + dt;
                            if (it < 0 || it >= t) continue;
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy * stride - padding + ky;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox * stride - padding + kx;
                                    if (ix < 0 || ix >= w) continue;
                                    acc += static_cast<double>(input.at(it, ci, iy, ix)) *
                                           weights.at(co, ci, dt, ky, kx);
                                }
                            }
                        }
                    out.at(o, co, oy, ox) = static_cast<float>(acc);
                }
    if (ledger)
        ledger->add("conv3d", static_cast<std::uint64_t>(out.numel()) * cin * kt * kh * kw);
    check_finite("conv3d", out);
    return out;
}

Tensor matmul(const Tensor &a, const Tensor &b, OpLedger *ledger) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: both operands must be rank 2, got " + a.shape_string() +
                                                " and " + b.shape_string());
    require(a.extent(1) == b.extent(0), "matmul: inner extents differ: " + a.shape_string() + " vs " +
                                            b.shape_string());
    const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(a.at(i, p)) * b.at(p, j);
            out.at(i, j) = static_cast<float>(acc);
        }
    if (ledger) ledger->add("matmul", static_cast<std::uint64_t>(m) * n * k);
    check_finite("matmul", out);
    return out;
}

std::vector<float> linear(const std::vector<float> &input, const Tensor &weights, const Tensor &bias,
                          OpLedger *ledger) {
    // Hot path (every query and window cell): build error strings only on failure.
    if (weights.rank() != 2)
        throw std::invalid_argument("linear: weights must be rank 2, got " + weights.shape_string());
    const int out_n = weights.extent(0), in_n = weights.extent(1);
    if (static_cast<int>(input.size()) != in_n)
        throw std::invalid_argument("linear: input width " + std::to_string(input.size()) +
                                    " does not match weights " + weights.shape_string());
    if (bias.numel() != 0 && (bias.rank() != 1 || bias.extent(0) != out_n))
        throw std::invalid_argument("linear: bias shape " + bias.shape_string() + " does not match " +
                                    std::to_string(out_n) + " outputs");
    std::vector<float> out(static_cast<size_t>(out_n));
    const bool has_bias = bias.numel() > 0;
    for (int o = 0; o < out_n; ++o) {
        double acc = has_bias ? bias[o] : 0.0;
        for (int i = 0; i < in_n; ++i) acc += static_cast<double>(weights.at(o, i)) * input[static_cast<size_t>(i)];
        out[static_cast<size_t>(o)] = static_cast<float>(acc);
        if (!std::isfinite(out[static_cast<size_t>(o)])) throw std::runtime_error("linear: non-finite output");
    }
    if (ledger) ledger->add("linear", static_cast<std::uint64_t>(out_n) * in_n);
    return out;
}

Tensor softmax_lastdim(const Tensor &input, OpLedger *ledger) {
    const int last = input.extent(input.rank() - 1);
    require(last >= 1, "softmax: empty last axis");
    Tensor out(input.shape());
    const std::int64_t rows = input.numel() / last;
    for (std::int64_t r = 0; r < rows; ++r) {
        const float *src = input.data() + r * last;
        float *dst = out.data() + r * last;
        float peak = src[0];
        for (int i = 1; i < last; ++i) peak = std::max(peak, src[i]);
        double sum = 0.0;
        for (int i = 0; i < last; ++i) {
            const double e = std::exp(static_cast<double>(src[i]) - peak);
            dst[i] = static_cast<float>(e);
            sum += e;
        }
        for (int i = 0; i < last; ++i) dst[i] = static_cast<float>(dst[i] / sum);
    }
    if (ledger) ledger->add("softmax", static_cast<std::uint64_t>(input.numel()) * 2);
    check_finite("softmax", out);
    return out;
}

Tensor leaky_relu(const Tensor &input, float slope, OpLedger *ledger) {
    Tensor out(input.shape());
    for (std::int64_t i = 0; i < input.numel(); ++i) out[i] = input[i] >= 0.0f ? input[i] : slope * input[i];
    if (ledger) ledger->add("leaky_relu", static_cast<std::uint64_t>(input.numel()));
    check_finite("leaky_relu", out);
    return out;
}

float gelu_scalar(float x) {
    return static_cast<float>(0.5 * static_cast<double>(x) * (1.0 + std::erf(static_cast<double>(x) / std::sqrt(2.0))));
}

float sigmoid_scalar(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); }

Tensor gelu(const Tensor &input, OpLedger *ledger) {
    Tensor out(input.shape());
    for (std::int64_t i = 0; i < input.numel(); ++i) out[i] = gelu_scalar(input[i]);
    if (ledger) ledger->add("gelu", static_cast<std::uint64_t>(input.numel()));
    check_finite("gelu", out);
    return out;
}

float sample_bilinear(const Tensor &input, int time, int channel, double y, double x, OpLedger *ledger) {
    // Hot path (every deformable tap): build the error string only on failure.
    if (input.rank() != 4)
        throw std::invalid_argument("sample_bilinear: input must be rank 4, got " + input.shape_string());
    const int h = input.extent(2), w = input.extent(3);
    const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    auto fetch = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return input.at(time, channel, yy, xx);
    };
    const double v = (1.0 - fy) * ((1.0 - fx) * fetch(y0, x0) + fx * fetch(y0, x0 + 1)) +
                     fy * ((1.0 - fx) * fetch(y0 + 1, x0) + fx * fetch(y0 + 1, x0 + 1));
    if (ledger) ledger->add("sample_bilinear", 4);
    if (!std::isfinite(v)) throw std::runtime_error("sample_bilinear: non-finite output");
    return static_cast<float>(v);
}

std::vector<float> sample_trilinear3d(const Tensor &sequence, double t_idx, double y, double x, OpLedger *ledger) {
    // Hot path (every query): build the error string only on failure.
    if (sequence.rank() != 4)
        throw std::invalid_argument("sample_trilinear3d: input must be rank 4, got " + sequence.shape_string());
    const int t = sequence.extent(0), c = sequence.extent(1);
    std::vector<float> out(static_cast<size_t>(c));
    if (t == 1) {
        for (int ch = 0; ch < c; ++ch) out[static_cast<size_t>(ch)] = sample_bilinear(sequence, 0, ch, y, x);
        if (ledger) ledger->add("sample_trilinear3d", static_cast<std::uint64_t>(c) * 8);
        return out;
    }
    double t0d = std::floor(t_idx);
    int t0 = static_cast<int>(t0d);
    t0 = std::clamp(t0, 0, t - 2);
    const double ft = t_idx - t0;
    for (int ch = 0; ch < c; ++ch) {
        const double lo = sample_bilinear(sequence, t0, ch, y, x);
        const double hi = sample_bilinear(sequence, t0 + 1, ch, y, x);
        out[static_cast<size_t>(ch)] = static_cast<float>((1.0 - ft) * lo + ft * hi);
    }
    if (ledger) ledger->add("sample_trilinear3d", static_cast<std::uint64_t>(c) * 8);
    return out;
}

Tensor channel_attention(const Tensor &input, const Tensor &fc0_w, const Tensor &fc0_b, const Tensor &fc1_w,
                         const Tensor &fc1_b, OpLedger *ledger) {
    require(input.rank() == 3 || input.rank() == 4, "channel_attention: input must be rank 3 or 4, got " +
                                                        input.shape_string());
    const bool batched = input.rank() == 4;
    const int n = batched ? input.extent(0) : 1;
    const int c = input.extent(batched ? 1 : 0);
    const int h = input.extent(batched ? 2 : 1), w = input.extent(batched ? 3 : 2);
    require(fc0_w.rank() == 2 && fc0_w.extent(1) == c,
            "channel_attention: gate shape " + fc0_w.shape_string() + " does not match " + std::to_string(c) +
                " channels");
    require(fc1_w.rank() == 2 && fc1_w.extent(0) == c && fc1_w.extent(1) == fc0_w.extent(0),
            "channel_attention: gate shapes " + fc0_w.shape_string() + " / " + fc1_w.shape_string() +
                " do not chain");

    Tensor out(input.shape());
    std::vector<float> pooled(static_cast<size_t>(c));
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            double sum = 0.0;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) sum += batched ? input.at(b, ch, yy, xx) : input.at(ch, yy, xx);
            pooled[static_cast<size_t>(ch)] = static_cast<float>(sum / (static_cast<double>(h) * w));
        }
        std::vector<float> hidden = linear(pooled, fc0_w, fc0_b, nullptr);
        for (auto &v : hidden) v = v >= 0.0f ? v : 0.1f * v;
        std::vector<float> gate = linear(hidden, fc1_w, fc1_b, nullptr);
        for (auto &v : gate) v = sigmoid_scalar(v);
        for (int ch = 0; ch < c; ++ch)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    const float v = (batched ? input.at(b, ch, yy, xx) : input.at(ch, yy, xx)) *
                                    gate[static_cast<size_t>(ch)];
                    if (batched)
                        out.at(b, ch, yy, xx) = v;
                    else
                        out.at(ch, yy, xx) = v;
                }
    }
    if (ledger) {
        const std::uint64_t per_slice = static_cast<std::uint64_t>(c) * h * w          // pool
                                        + static_cast<std::uint64_t>(fc0_w.numel())    // gate layer 0
                                        + static_cast<std::uint64_t>(fc1_w.numel())    // gate layer 1
                                        + static_cast<std::uint64_t>(c) * h * w;       // scale
        ledger->add("channel_attention", per_slice * static_cast<std::uint64_t>(n));
    }
    check_finite("channel_attention", out);
    return out;
}

Tensor deform_conv2d(const Tensor &input, const Tensor &weights, const Tensor &bias, const Tensor &offsets,
                     OpLedger *ledger) {
    require(input.rank() == 4, "deform_conv2d: input must be rank 4, got " + input.shape_string());
    require(weights.rank() == 4 && weights.extent(2) == 3 && weights.extent(3) == 3,
            "deform_conv2d: weights must be (Cout,Cin,3,3), got " + weights.shape_string());
    const int n = input.extent(0), cin = input.extent(1), h = input.extent(2), w = input.extent(3);
    const int cout = weights.extent(0);
    require(weights.extent(1) == cin, "deform_conv2d: channel mismatch between input " + input.shape_string() +
                                          " and weights " + weights.shape_string());
    require(offsets.rank() == 4 && offsets.extent(0) == n && offsets.extent(1) == 18 && offsets.extent(2) == h &&
                offsets.extent(3) == w,
            "deform_conv2d: offsets must be (N,18,H,W) matching input, got " + offsets.shape_string());

    Tensor out({n, cout, h, w});
    const bool has_bias = bias.numel() > 0;
    for (int b = 0; b < n; ++b)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < w; ++ox) {
                // Sample positions shared by all output channels at this pixel.
                double sy[9], sx[9];
                for (int tap = 0; tap < 9; ++tap) {
                    const int ky = tap / 3, kx = tap % 3;
                    sy[tap] = oy + ky - 1 + offsets.at(b, 2 * tap, oy, ox);
                    sx[tap] = ox + kx - 1 + offsets.at(b, 2 * tap + 1, oy, ox);
                }
                for (int co = 0; co < cout; ++co) {
                    double acc = has_bias ? bias[co] : 0.0;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int tap = 0; tap < 9; ++tap)
                            acc += static_cast<double>(weights.at(co, ci, tap / 3, tap % 3)) *
                                   sample_bilinear(input, b, ci, sy[tap], sx[tap]);
                    out.at(b, co, oy, ox) = static_cast<float>(acc);
                }
            }
    if (ledger)
        ledger->add("deform_conv2d", static_cast<std::uint64_t>(out.numel()) * cin * 9 * 5);
    check_finite("deform_conv2d", out);
    return out;
}

namespace {

double catmull_rom(double t) {
    const double a = std::abs(t);
    if (a <= 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
    if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
    return 0.0;
}

template <typename Fetch>
Tensor resize_common(const Tensor &input, int out_h, int out_w, Fetch fetch_row_col, const char *name,
                     std::uint64_t madds_per_out, OpLedger *ledger) {
    require(input.rank() == 2 || input.rank() == 3, std::string(name) + ": input must be rank 2 or 3, got " +
                                                        input.shape_string());
    require(out_h >= 1 && out_w >= 1, std::string(name) + ": output extents must be positive");
    const bool has_c = input.rank() == 3;
    const int c = has_c ? input.extent(0) : 1;
    const int h = input.extent(has_c ? 1 : 0), w = input.extent(has_c ? 2 : 1);

    std::vector<int> out_shape = has_c ? std::vector<int>{c, out_h, out_w} : std::vector<int>{out_h, out_w};
    Tensor out(out_shape);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < out_h; ++oy) {
            const double src_y = (oy + 0.5) * static_cast<double>(h) / out_h - 0.5;
            for (int ox = 0; ox < out_w; ++ox) {
                const double src_x = (ox + 0.5) * static_cast<double>(w) / out_w - 0.5;
                const float v = fetch_row_col(input, has_c ? ch : -1, src_y, src_x, h, w);
                if (has_c)
                    out.at(ch, oy, ox) = v;
                else
                    out.at(oy, ox) = v;
            }
        }
    if (ledger) ledger->add(name, static_cast<std::uint64_t>(out.numel()) * madds_per_out);
    check_finite(name, out);
    return out;
}

float fetch_clamped(const Tensor &input, int ch, int y, int x, int h, int w) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return ch < 0 ? input.at(y, x) : input.at(ch, y, x);
}

} // namespace

Tensor resize_bilinear(const Tensor &input, int out_h, int out_w, OpLedger *ledger) {
    auto fetch = [](const Tensor &in, int ch, double sy, double sx, int h, int w) -> float {
        const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
        const double fy = sy - y0, fx = sx - x0;
        const double v = (1.0 - fy) * ((1.0 - fx) * fetch_clamped(in, ch, y0, x0, h, w) +
                                       fx * fetch_clamped(in, ch, y0, x0 + 1, h, w)) +
                         fy * ((1.0 - fx) * fetch_clamped(in, ch, y0 + 1, x0, h, w) +
                               fx * fetch_clamped(in, ch, y0 + 1, x0 + 1, h, w));
        return static_cast<float>(v);
    };
    return resize_common(input, out_h, out_w, fetch, "resize_bilinear", 4, ledger);
}

Tensor resize_bicubic(const Tensor &input, int out_h, int out_w, OpLedger *ledger) {
    auto fetch = [](const Tensor &in, int ch, double sy, double sx, int h, int w) -> float {
        const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
        double acc = 0.0;
        for (int dy = -1; dy <= 2; ++dy) {
            const double wy = catmull_rom(sy - (y0 + dy));
            if (wy == 0.0) continue;
            double row = 0.0;
            for (int dx = -1; dx <= 2; ++dx) {
                const double wx = catmull_rom(sx - (x0 + dx));
                if (wx == 0.0) continue;
                row += wx * fetch_clamped(in, ch, y0 + dy, x0 + dx, h, w);
            }
            acc += wy * row;
        }
        return static_cast<float>(acc);
    };
    return resize_common(input, out_h, out_w, fetch, "resize_bicubic", 8, ledger);
}

} // namespace evsr
