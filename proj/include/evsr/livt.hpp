#pragma once

#include <array>
#include <string>
#include <vector>

#include "evsr/tensor.hpp"
#include "evsr/weights.hpp"

namespace evsr {

// The latent-feature timestamps {0, 1/(M+1), ..., M/(M+1), 1}: two frames plus
// M event segments, uniformly spaced on the normalized clip.
struct TimestampGrid {
    std::vector<double> stamps;

    static TimestampGrid uniform(int m); // M+2 stamps
    int size() const { return static_cast<int>(stamps.size()); }
    void validate() const;
};

// Local attention window extents (temporal x spatial), all odd so windows center.
struct LocalGridSpec {
    int t_g = 3;
    int h_g = 3;
    int w_g = 3;

    void validate() const;
    int cells() const { return h_g * w_g; }
};

// Temporal candidate selection: the size-t_g index window into grid.stamps
// minimizing Sum |tau_i - tau|; ties pick the smaller starting index. For sorted
// stamps the optimum is always contiguous, which the tests verify exhaustively.
std::vector<int> select_timestamps(const TimestampGrid &grid, double tau, int t_g);

// Cosine positional encoding of a relative offset triple: for each coordinate,
// [sin(2^0 d), cos(2^0 d), ..., sin(2^{L-1} d), cos(2^{L-1} d)] -> 6L values.
std::vector<float> positional_encoding(double dt, double dx, double dy, int levels);

// One query's local attention. keys/values hold t_g slices, each cells*C floats
// (cell-major); bias holds t_g slices of `cells` logit offsets. Per slice:
// softmax(dot(q, k_cell)/sqrt(C) + bias_cell) mixes the values; slice outputs
// concatenate to t_g*C floats.
std::vector<float> local_attention(const std::vector<float> &q, const std::vector<std::vector<float>> &keys,
                                   const std::vector<std::vector<float>> &values,
                                   const std::vector<std::vector<float>> &bias, int channels,
                                   OpLedger *ledger = nullptr);

// Dense query/key/value embeddings of a feature sequence.
struct LivtEmbeddings {
    Tensor q, k, v; // each (M+2, C, H, W)
};

// One implicit upsampler: 3D-conv QKV embedding, positional-bias projection,
// local attention, and a 5-layer GELU MLP decoding continuous (tau, x, y) to RGB.
class LivtUpsampler {
  public:
    // Pulls `prefix`.* tensors (see livt_weight_shapes) out of the store.
    LivtUpsampler(const WeightStore &store, const std::string &prefix, int channels, LocalGridSpec spec,
                  int pe_levels);

    const LocalGridSpec &spec() const { return spec_; }
    int channels() const { return channels_; }

    // QKV heads: 3x3x3 convolution over (time, height, width), padding 1.
    LivtEmbeddings encode(const Tensor &features, OpLedger *ledger = nullptr) const;

    // Full per-query chain: temporal selection, trilinear query sampling, nearest
    // key/value windows, positional bias, attention, MLP decode. Pure in its
    // arguments, so batch rendering and per-pixel calls agree bit-for-bit.
    std::array<float, 3> decode_query(const LivtEmbeddings &emb, const TimestampGrid &grid, double tau, double x,
                                      double y, OpLedger *ledger = nullptr) const;

    // Regular-lattice synthesis of one frame at (out_h, out_w); queries sit at
    // pixel centers ((j+0.5)/out_w, (i+0.5)/out_h).
    Tensor render_frame(const LivtEmbeddings &emb, const TimestampGrid &grid, double tau, int out_h, int out_w,
                        OpLedger *ledger = nullptr) const;

    // Multiply-adds of a single decode_query for a (t_len, C, h, w) embedding —
    // a pure function of shapes, measured by running one query on zeros.
    double per_query_madds(int t_len, int h, int w) const;

    // Multiply-adds of encode() for a (t_len, c_in, h, w) input.
    double encode_madds(int t_len, int c_in, int h, int w) const;

  private:
    int channels_;
    int pe_levels_;
    LocalGridSpec spec_;
    Tensor q_w_, q_b_, k_w_, k_b_, v_w_, v_b_;
    Tensor bias_w_, bias_b_;
    std::vector<Tensor> mlp_w_, mlp_b_;
};

} // namespace evsr
