#include "evsr/livt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evsr/kernels.hpp"

namespace evsr {

TimestampGrid TimestampGrid::uniform(int m) {
    if (m < 0) throw std::invalid_argument("timestamp grid: M must be >= 0, got " + std::to_string(m));
    TimestampGrid grid;
    grid.stamps.reserve(static_cast<size_t>(m) + 2);
    for (int i = 0; i <= m + 1; ++i) grid.stamps.push_back(static_cast<double>(i) / (m + 1));
    return grid;
}

void TimestampGrid::validate() const {
    if (stamps.size() < 2) throw std::invalid_argument("timestamp grid: need at least 2 stamps");
    if (stamps.front() != 0.0 || stamps.back() != 1.0)
        throw std::invalid_argument("timestamp grid: endpoints must be 0 and 1");
    for (size_t i = 1; i < stamps.size(); ++i)
        if (stamps[i] <= stamps[i - 1]) throw std::invalid_argument("timestamp grid: stamps must increase");
}

void LocalGridSpec::validate() const {
    for (int extent : {t_g, h_g, w_g})
        if (extent < 1 || extent % 2 == 0)
            throw std::invalid_argument("local grid extents must be odd and positive, got " + std::to_string(t_g) +
                                        "x" + std::to_string(h_g) + "x" + std::to_string(w_g));
}

std::vector<int> select_timestamps(const TimestampGrid &grid, double tau, int t_g) {
    const int n = grid.size();
    if (t_g < 1 || t_g > n)
        throw std::invalid_argument("select_timestamps: window size " + std::to_string(t_g) + " exceeds " +
                                    std::to_string(n) + " stamps");
    // Sorted stamps make the minimizer a contiguous window; scan all starts.
    int best_start = 0;
    double best_sum = 0.0;
    for (int start = 0; start + t_g <= n; ++start) {
        double sum = 0.0;
        for (int j = 0; j < t_g; ++j) sum += std::abs(grid.stamps[static_cast<size_t>(start + j)] - tau);
        if (start == 0 || sum < best_sum) {
            best_sum = sum;
            best_start = start;
        }
    }
    std::vector<int> out(static_cast<size_t>(t_g));
    for (int j = 0; j < t_g; ++j) out[static_cast<size_t>(j)] = best_start + j;
    return out;
}

std::vector<float> positional_encoding(double dt, double dx, double dy, int levels) {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(6) * levels);
    for (double d : {dt, dx, dy}) {
        double scaled = d;
        for (int l = 0; l < levels; ++l) {
            out.push_back(static_cast<float>(std::sin(scaled)));
            out.push_back(static_cast<float>(std::cos(scaled)));
            scaled *= 2.0;
        }
    }
    return out;
}

std::vector<float> local_attention(const std::vector<float> &q, const std::vector<std::vector<float>> &keys,
                                   const std::vector<std::vector<float>> &values,
                                   const std::vector<std::vector<float>> &bias, int channels, OpLedger *ledger) {
    const int t_g = static_cast<int>(keys.size());
    if (values.size() != keys.size() || bias.size() != keys.size())
        throw std::invalid_argument("local_attention: keys/values/bias slice counts differ");
    if (static_cast<int>(q.size()) != channels)
        throw std::invalid_argument("local_attention: query width " + std::to_string(q.size()) +
                                    " does not match C = " + std::to_string(channels));
    const double scale = 1.0 / std::sqrt(static_cast<double>(channels));

    std::vector<float> out;
    out.reserve(static_cast<size_t>(t_g) * channels);
    std::vector<double> logits;
    for (int slice = 0; slice < t_g; ++slice) {
        const auto &k = keys[static_cast<size_t>(slice)];
        const auto &v = values[static_cast<size_t>(slice)];
        const auto &b = bias[static_cast<size_t>(slice)];
        const int cells = static_cast<int>(b.size());
        if (static_cast<int>(k.size()) != cells * channels || v.size() != k.size())
            throw std::invalid_argument("local_attention: slice " + std::to_string(slice) + " has " +
                                        std::to_string(k.size()) + " key floats for " + std::to_string(cells) +
                                        " cells of width " + std::to_string(channels));

        logits.assign(static_cast<size_t>(cells), 0.0);
        double peak = -1e300;
        for (int cell = 0; cell < cells; ++cell) {
            double dot = 0.0;
            for (int c = 0; c < channels; ++c)
                dot += static_cast<double>(q[static_cast<size_t>(c)]) *
                       k[static_cast<size_t>(cell) * channels + c];
            logits[static_cast<size_t>(cell)] = dot * scale + b[static_cast<size_t>(cell)];
            peak = std::max(peak, logits[static_cast<size_t>(cell)]);
        }
        double denom = 0.0;
        for (int cell = 0; cell < cells; ++cell) {
            logits[static_cast<size_t>(cell)] = std::exp(logits[static_cast<size_t>(cell)] - peak);
            denom += logits[static_cast<size_t>(cell)];
        }
        for (int c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int cell = 0; cell < cells; ++cell)
                acc += logits[static_cast<size_t>(cell)] / denom * v[static_cast<size_t>(cell) * channels + c];
            out.push_back(static_cast<float>(acc));
        }
        if (ledger) {
            ledger->add("attention", static_cast<std::uint64_t>(cells) * channels * 2); // dots + value mix
            ledger->add("softmax", static_cast<std::uint64_t>(cells) * 2);
        }
    }
    for (float v : out)
        if (!std::isfinite(v)) throw std::runtime_error("local_attention: non-finite output");
    return out;
}

LivtUpsampler::LivtUpsampler(const WeightStore &store, const std::string &prefix, int channels, LocalGridSpec spec,
                             int pe_levels)
    : channels_(channels), pe_levels_(pe_levels), spec_(spec),
      q_w_(store.get(prefix + ".qkv.q.weight")), q_b_(store.get(prefix + ".qkv.q.bias")),
      k_w_(store.get(prefix + ".qkv.k.weight")), k_b_(store.get(prefix + ".qkv.k.bias")),
      v_w_(store.get(prefix + ".qkv.v.weight")), v_b_(store.get(prefix + ".qkv.v.bias")),
      bias_w_(store.get(prefix + ".bias_proj.weight")), bias_b_(store.get(prefix + ".bias_proj.bias")) {
    spec_.validate();
    if (q_w_.extent(0) != channels)
        throw std::invalid_argument("upsampler " + prefix + ": qkv weights are " + q_w_.shape_string() +
                                    " but C = " + std::to_string(channels));
    if (bias_w_.extent(1) != 6 * pe_levels)
        throw std::invalid_argument("upsampler " + prefix + ": bias projection " + bias_w_.shape_string() +
                                    " does not match 6L = " + std::to_string(6 * pe_levels));
    for (int layer = 0; layer < 5; ++layer) {
        mlp_w_.push_back(store.get(prefix + ".mlp." + std::to_string(layer) + ".weight"));
        mlp_b_.push_back(store.get(prefix + ".mlp." + std::to_string(layer) + ".bias"));
    }
    if (mlp_w_[0].extent(1) != spec_.t_g * channels + channels)
        throw std::invalid_argument("upsampler " + prefix + ": mlp.0 expects width " +
                                    std::to_string(mlp_w_[0].extent(1)) + " but attention yields " +
                                    std::to_string(spec_.t_g * channels + channels));
}

LivtEmbeddings LivtUpsampler::encode(const Tensor &features, OpLedger *ledger) const {
    LivtEmbeddings emb;
    emb.q = conv3d(features, q_w_, q_b_, 1, 1, ledger);
    emb.k = conv3d(features, k_w_, k_b_, 1, 1, ledger);
    emb.v = conv3d(features, v_w_, v_b_, 1, 1, ledger);
    return emb;
}

std::array<float, 3> LivtUpsampler::decode_query(const LivtEmbeddings &emb, const TimestampGrid &grid, double tau,
                                                 double x, double y, OpLedger *ledger) const {
    const int t_len = emb.q.extent(0), h = emb.q.extent(2), w = emb.q.extent(3);
    if (grid.size() != t_len)
        throw std::invalid_argument("decode_query: grid has " + std::to_string(grid.size()) + " stamps for " +
                                    std::to_string(t_len) + " feature slices");
    const std::vector<int> window = select_timestamps(grid, tau, spec_.t_g);

    // Continuous lattice coordinates: pixel centers at (i+0.5)/extent.
    const double fy = y * h - 0.5, fx = x * w - 0.5;
    const double g = tau * (t_len - 1); // fractional time index; its two
                                        // neighbors always lie in the window
    std::vector<float> q_hat = sample_trilinear3d(emb.q, g, fy, fx, ledger);

    // Nearest lattice point anchors the spatial window.
    const int cy = std::clamp(static_cast<int>(std::floor(fy + 0.5)), 0, h - 1);
    const int cx = std::clamp(static_cast<int>(std::floor(fx + 0.5)), 0, w - 1);

    // Relative offsets are scaled by the half-width of their attainable range
    // so encodings stay within [-1, 1]: time spans +-(t_g - 1) stamp spacings
    // (+-1/2 spacing when t_g = 1), space spans +-(w_g / 2) cells.
    const double stamp_spacing = grid.stamps[1] - grid.stamps[0];
    const double t_half = (spec_.t_g > 1 ? spec_.t_g - 1.0 : 0.5) * stamp_spacing;

    std::vector<std::vector<float>> keys, values, bias;
    for (int slice : window) {
        std::vector<float> k_slice, v_slice, b_slice;
        k_slice.reserve(static_cast<size_t>(spec_.cells()) * channels_);
        v_slice.reserve(static_cast<size_t>(spec_.cells()) * channels_);
        for (int dy = 0; dy < spec_.h_g; ++dy)
            for (int dx = 0; dx < spec_.w_g; ++dx) {
                const int yy = cy + dy - spec_.h_g / 2;
                const int xx = cx + dx - spec_.w_g / 2;
                const bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
                for (int c = 0; c < channels_; ++c) {
                    k_slice.push_back(inside ? emb.k.at(slice, c, yy, xx) : 0.0f);
                    v_slice.push_back(inside ? emb.v.at(slice, c, yy, xx) : 0.0f);
                }
                const double dt_n = (grid.stamps[static_cast<size_t>(slice)] - tau) / t_half;
                const double dx_n = (xx - fx) / (spec_.w_g / 2.0);
                const double dy_n = (yy - fy) / (spec_.h_g / 2.0);
                std::vector<float> enc = positional_encoding(dt_n, dx_n, dy_n, pe_levels_);
                if (ledger) ledger->add("positional_encoding", enc.size());
                b_slice.push_back(linear(enc, bias_w_, bias_b_, ledger)[0]);
            }
        keys.push_back(std::move(k_slice));
        values.push_back(std::move(v_slice));
        bias.push_back(std::move(b_slice));
    }

    std::vector<float> mixed = local_attention(q_hat, keys, values, bias, channels_, ledger);
    mixed.insert(mixed.end(), q_hat.begin(), q_hat.end());

    std::vector<float> act = std::move(mixed);
    for (int layer = 0; layer < 5; ++layer) {
        act = linear(act, mlp_w_[static_cast<size_t>(layer)], mlp_b_[static_cast<size_t>(layer)], ledger);
        if (layer < 4) {
            for (float &v : act) v = gelu_scalar(v);
            if (ledger) ledger->add("gelu", act.size());
        }
    }
    return {act[0], act[1], act[2]};
}

Tensor LivtUpsampler::render_frame(const LivtEmbeddings &emb, const TimestampGrid &grid, double tau, int out_h,
                                   int out_w, OpLedger *ledger) const {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("render_frame: output extents must be positive");
    Tensor frame({3, out_h, out_w});
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            const std::array<float, 3> rgb =
                decode_query(emb, grid, tau, (j + 0.5) / out_w, (i + 0.5) / out_h, ledger);
            for (int c = 0; c < 3; ++c) frame.at(c, i, j) = rgb[static_cast<size_t>(c)];
        }
    return frame;
}

double LivtUpsampler::per_query_madds(int t_len, int h, int w) const {
    LivtEmbeddings zeros;
    zeros.q = Tensor({t_len, channels_, h, w});
    zeros.k = Tensor({t_len, channels_, h, w});
    zeros.v = Tensor({t_len, channels_, h, w});
    TimestampGrid grid = TimestampGrid::uniform(t_len - 2);
    OpLedger scratch;
    decode_query(zeros, grid, 0.5, 0.5, 0.5, &scratch);
    return static_cast<double>(scratch.total());
}

double LivtUpsampler::encode_madds(int t_len, int c_in, int h, int w) const {
    if (c_in != q_w_.extent(1))
        throw std::invalid_argument("encode_madds: input channels " + std::to_string(c_in) +
                                    " do not match qkv weights " + q_w_.shape_string());
    OpLedger scratch;
    encode(Tensor({t_len, c_in, h, w}), &scratch);
    return static_cast<double>(scratch.total());
}

} // namespace evsr
