#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "evsr/kernels.hpp"
#include "evsr/livt.hpp"
#include "evsr/weights.hpp"
#include "oracle.hpp"

using evsr::LivtEmbeddings;
using evsr::LivtUpsampler;
using evsr::LocalGridSpec;
using evsr::Tensor;
using evsr::TimestampGrid;
using evsr::WeightStore;

namespace {

// Minimal hand-built store: identity Q head, zero K/V heads, zero bias
// projection, and an MLP that routes the sampled query embedding's first
// channel through every layer (so output = gelu^4 of that channel).
WeightStore passthrough_store(int t_g) {
    WeightStore store;
    Tensor ident({1, 1, 3, 3, 3});
    ident.at(0, 0, 1, 1, 1) = 1.0f;
    store.put("toy.qkv.q.weight", ident);
    store.put("toy.qkv.q.bias", Tensor({1}));
    store.put("toy.qkv.k.weight", Tensor({1, 1, 3, 3, 3}));
    store.put("toy.qkv.k.bias", Tensor({1}));
    store.put("toy.qkv.v.weight", Tensor({1, 1, 3, 3, 3}));
    store.put("toy.qkv.v.bias", Tensor({1}));
    store.put("toy.bias_proj.weight", Tensor({1, 6}));
    store.put("toy.bias_proj.bias", Tensor({1}));
    Tensor pick({1, t_g + 1});
    pick.at(0, t_g) = 1.0f; // the query embedding follows the attention block
    store.put("toy.mlp.0.weight", pick);
    store.put("toy.mlp.0.bias", Tensor({1}));
    for (int layer = 1; layer <= 3; ++layer) {
        store.put("toy.mlp." + std::to_string(layer) + ".weight", Tensor({1, 1}, {1.0f}));
        store.put("toy.mlp." + std::to_string(layer) + ".bias", Tensor({1}));
    }
    store.put("toy.mlp.4.weight", Tensor({3, 1}, {1.0f, 1.0f, 1.0f}));
    store.put("toy.mlp.4.bias", Tensor({3}));
    return store;
}

WeightStore seeded_upsampler_store(int channels, int t_g, int pe_levels, std::uint64_t seed) {
    WeightStore store;
    evsr::seeded_fill(store, evsr::livt_weight_shapes("u0", channels, t_g, pe_levels), seed);
    return store;
}

// Straight-line re-implementation of the full per-query chain, built on the
// oracle helpers only; weights are read from the same store.
std::array<double, 3> reference_decode(const WeightStore &store, const LivtEmbeddings &emb,
                                       const TimestampGrid &grid, double tau, double x, double y, int channels,
                                       LocalGridSpec spec, int pe_levels) {
    const int t_len = emb.q.extent(0), h = emb.q.extent(2), w = emb.q.extent(3);
    const int start = oracle::best_window_start(grid.stamps, tau, spec.t_g);

    const double fy = y * h - 0.5, fx = x * w - 0.5;
    const double g = tau * (t_len - 1);
    std::vector<double> q_hat_d = oracle::trilinear(emb.q, g, fy, fx);
    std::vector<float> q_hat(q_hat_d.begin(), q_hat_d.end());

    const int cy = std::clamp(static_cast<int>(std::floor(fy + 0.5)), 0, h - 1);
    const int cx = std::clamp(static_cast<int>(std::floor(fx + 0.5)), 0, w - 1);
    const double spacing = grid.stamps[1] - grid.stamps[0];
    const double t_half = (spec.t_g > 1 ? spec.t_g - 1.0 : 0.5) * spacing;

    const Tensor &bias_w = store.get("u0.bias_proj.weight");
    const Tensor &bias_b = store.get("u0.bias_proj.bias");

    std::vector<std::vector<float>> keys, values, bias;
    for (int s = 0; s < spec.t_g; ++s) {
        const int slice = start + s;
        std::vector<float> k_slice, v_slice, b_slice;
        for (int dy = 0; dy < spec.h_g; ++dy)
            for (int dx = 0; dx < spec.w_g; ++dx) {
                const int yy = cy + dy - spec.h_g / 2;
                const int xx = cx + dx - spec.w_g / 2;
                const bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
                for (int c = 0; c < channels; ++c) {
                    k_slice.push_back(inside ? emb.k.at(slice, c, yy, xx) : 0.0f);
                    v_slice.push_back(inside ? emb.v.at(slice, c, yy, xx) : 0.0f);
                }
                std::vector<float> enc;
                for (double d : {(grid.stamps[static_cast<size_t>(slice)] - tau) / t_half,
                                 (xx - fx) / (spec.w_g / 2.0), (yy - fy) / (spec.h_g / 2.0)}) {
                    double scaled = d;
                    for (int l = 0; l < pe_levels; ++l) {
                        enc.push_back(static_cast<float>(std::sin(scaled)));
                        enc.push_back(static_cast<float>(std::cos(scaled)));
                        scaled *= 2.0;
                    }
                }
                b_slice.push_back(oracle::linear(enc, bias_w, bias_b)[0]);
            }
        keys.push_back(std::move(k_slice));
        values.push_back(std::move(v_slice));
        bias.push_back(std::move(b_slice));
    }

    std::vector<double> mixed = oracle::attention(q_hat, keys, values, bias, channels);
    std::vector<float> act(mixed.begin(), mixed.end());
    for (float v : q_hat) act.push_back(v);

    for (int layer = 0; layer < 5; ++layer) {
        const std::string base = "u0.mlp." + std::to_string(layer);
        act = oracle::linear(act, store.get(base + ".weight"), store.get(base + ".bias"));
        if (layer < 4)
            for (float &v : act) v = static_cast<float>(oracle::gelu(v));
    }
    return {act[0], act[1], act[2]};
}

} // namespace

TEST_CASE("uniform timestamp grid spans [0,1] with M+2 stamps") {
    TimestampGrid grid = TimestampGrid::uniform(7);
    REQUIRE(grid.size() == 9);
    CHECK(grid.stamps.front() == 0.0);
    CHECK(grid.stamps.back() == 1.0);
    for (int i = 0; i < 9; ++i) CHECK(grid.stamps[static_cast<size_t>(i)] == doctest::Approx(i / 8.0).epsilon(1e-12));
    CHECK_NOTHROW(grid.validate());

    TimestampGrid two = TimestampGrid::uniform(0);
    CHECK(two.size() == 2);
    CHECK_NOTHROW(two.validate());

    TimestampGrid bad;
    bad.stamps = {0.0, 0.5, 0.25, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(TimestampGrid::uniform(-1), std::invalid_argument);
}

TEST_CASE("local grid spec requires odd extents") {
    const LocalGridSpec cube{3, 3, 3};
    const LocalGridSpec tall{1, 5, 3};
    const LocalGridSpec even_time{2, 3, 3};
    const LocalGridSpec flat{3, 0, 3};
    CHECK_NOTHROW(cube.validate());
    CHECK_NOTHROW(tall.validate());
    CHECK_THROWS_AS(even_time.validate(), std::invalid_argument);
    CHECK_THROWS_AS(flat.validate(), std::invalid_argument);
    CHECK(cube.cells() == 9);
}

TEST_CASE("timestamp selection: boundary, center, and tie examples") {
    TimestampGrid grid = TimestampGrid::uniform(7);
    CHECK(evsr::select_timestamps(grid, 0.0, 3) == std::vector<int>{0, 1, 2});
    CHECK(evsr::select_timestamps(grid, 1.0, 3) == std::vector<int>{6, 7, 8});
    CHECK(evsr::select_timestamps(grid, 0.5, 3) == std::vector<int>{3, 4, 5});

    // tau = 3/16 sits exactly between stamps 1 and 2: the tie picks the
    // smaller start.
    CHECK(evsr::select_timestamps(grid, 3.0 / 16.0, 1) == std::vector<int>{1});

    // tau = 0.2: verified against the all-subsets optimum below, spot value here.
    std::vector<int> window = evsr::select_timestamps(grid, 0.2, 3);
    double sum = 0.0;
    for (int idx : window) sum += std::abs(grid.stamps[static_cast<size_t>(idx)] - 0.2);
    CHECK(sum == doctest::Approx(oracle::best_subset_distance(grid.stamps, 0.2, 3)).epsilon(1e-12));

    CHECK_THROWS_AS(evsr::select_timestamps(grid, 0.5, 10), std::invalid_argument);
    CHECK_THROWS_AS(evsr::select_timestamps(grid, 0.5, 0), std::invalid_argument);
}

TEST_CASE("timestamp selection equals the exhaustive optimum everywhere") {
    for (int m : {3, 5, 7, 9}) {
        TimestampGrid grid = TimestampGrid::uniform(m);
        for (int t_g : {1, 3, 5}) {
            for (int step = 0; step <= 200; ++step) {
                const double tau = step / 200.0;
                std::vector<int> window = evsr::select_timestamps(grid, tau, t_g);
                REQUIRE(static_cast<int>(window.size()) == t_g);
                for (size_t i = 1; i < window.size(); ++i) CHECK(window[i] == window[i - 1] + 1); // contiguous
                double sum = 0.0;
                for (int idx : window) sum += std::abs(grid.stamps[static_cast<size_t>(idx)] - tau);
                // No subset of any shape beats the returned window...
                CHECK(sum <= oracle::best_subset_distance(grid.stamps, tau, t_g) + 1e-12);
                // ...and ties resolve to the smallest start.
                CHECK(window[0] == oracle::best_window_start(grid.stamps, tau, t_g));
            }
        }
    }
}

TEST_CASE("positional encoding: zeros, parity, explicit two-level block") {
    std::vector<float> zero = evsr::positional_encoding(0.0, 0.0, 0.0, 10);
    REQUIRE(zero.size() == 60);
    for (size_t i = 0; i < zero.size(); i += 2) {
        CHECK(zero[i] == 0.0f);     // sin terms
        CHECK(zero[i + 1] == 1.0f); // cos terms
    }

    std::vector<float> pos = evsr::positional_encoding(0.3, -0.5, 0.8, 4);
    std::vector<float> neg = evsr::positional_encoding(-0.3, 0.5, -0.8, 4);
    REQUIRE(pos.size() == 24);
    for (size_t i = 0; i < pos.size(); i += 2) {
        CHECK(pos[i] == doctest::Approx(-neg[i]).epsilon(1e-6));    // sin is odd
        CHECK(pos[i + 1] == doctest::Approx(neg[i + 1]).epsilon(1e-6)); // cos is even
    }

    std::vector<float> two = evsr::positional_encoding(0.5, 0.0, 0.0, 2);
    REQUIRE(two.size() == 12);
    CHECK(two[0] == doctest::Approx(std::sin(0.5)).epsilon(1e-6));
    CHECK(two[1] == doctest::Approx(std::cos(0.5)).epsilon(1e-6));
    CHECK(two[2] == doctest::Approx(std::sin(1.0)).epsilon(1e-6));
    CHECK(two[3] == doctest::Approx(std::cos(1.0)).epsilon(1e-6));
}

TEST_CASE("local attention: uniform keys average, bias saturation, weight sums") {
    std::mt19937 rng(51);
    const int c = 4, cells = 9;

    // All keys identical + zero bias -> every logit equal -> plain mean.
    std::vector<float> q = oracle::rand_values(rng, c);
    std::vector<float> same_key = oracle::rand_values(rng, c);
    std::vector<float> keys_flat, values_flat;
    for (int cell = 0; cell < cells; ++cell)
        for (int ch = 0; ch < c; ++ch) keys_flat.push_back(same_key[static_cast<size_t>(ch)]);
    values_flat = oracle::rand_values(rng, cells * c);
    std::vector<float> out =
        evsr::local_attention(q, {keys_flat}, {values_flat}, {std::vector<float>(cells, 0.0f)}, c);
    REQUIRE(out.size() == static_cast<size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0.0;
        for (int cell = 0; cell < cells; ++cell) mean += values_flat[static_cast<size_t>(cell) * c + ch];
        mean /= cells;
        CHECK(out[static_cast<size_t>(ch)] == doctest::Approx(mean).epsilon(1e-5));
    }

    // A +1000 bias on one cell makes the output that cell's value vector.
    std::vector<float> spike(cells, 0.0f);
    spike[5] = 1000.0f;
    std::vector<float> winner =
        evsr::local_attention(q, {keys_flat}, {values_flat}, {spike}, c);
    for (int ch = 0; ch < c; ++ch)
        CHECK(winner[static_cast<size_t>(ch)] ==
              doctest::Approx(values_flat[static_cast<size_t>(5) * c + ch]).epsilon(1e-5));

    // All-ones values force output 1 regardless of weights (weights sum to 1).
    std::vector<float> rand_keys = oracle::rand_values(rng, cells * c);
    std::vector<float> rand_bias = oracle::rand_values(rng, cells, -2.0f, 2.0f);
    std::vector<float> ones(static_cast<size_t>(cells) * c, 1.0f);
    std::vector<float> unit = evsr::local_attention(q, {rand_keys}, {ones}, {rand_bias}, c);
    for (float v : unit) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("local attention matches the dense oracle over all slices") {
    std::mt19937 rng(52);
    const int c = 4, cells = 9, t_g = 3;
    std::vector<float> q = oracle::rand_values(rng, c);
    std::vector<std::vector<float>> keys, values, bias;
    for (int s = 0; s < t_g; ++s) {
        keys.push_back(oracle::rand_values(rng, cells * c));
        values.push_back(oracle::rand_values(rng, cells * c));
        bias.push_back(oracle::rand_values(rng, cells, -1.0f, 1.0f));
    }
    evsr::OpLedger ledger;
    std::vector<float> got = evsr::local_attention(q, keys, values, bias, c, &ledger);
    std::vector<double> want = oracle::attention(q, keys, values, bias, c);
    REQUIRE(got.size() == static_cast<size_t>(t_g) * c);
    REQUIRE(want.size() == got.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(oracle::close(got[i], want[i], 1e-4));
    CHECK(ledger.count("attention") == static_cast<std::uint64_t>(t_g) * cells * c * 2);
    CHECK(ledger.count("softmax") == static_cast<std::uint64_t>(t_g) * cells * 2);

    std::vector<float> short_q(2, 0.0f);
    CHECK_THROWS_AS(evsr::local_attention(short_q, keys, values, bias, c), std::invalid_argument);
}

TEST_CASE("qkv encoding: zeros, identity toy kernel, conv3d agreement") {
    WeightStore store = passthrough_store(3);
    LivtUpsampler toy(store, "toy", 1, LocalGridSpec{3, 3, 3}, 1);

    LivtEmbeddings zero = toy.encode(Tensor({3, 1, 4, 4}));
    for (std::int64_t i = 0; i < zero.q.numel(); ++i) {
        CHECK(zero.q[i] == 0.0f);
        CHECK(zero.k[i] == 0.0f);
        CHECK(zero.v[i] == 0.0f);
    }

    std::mt19937 rng(53);
    Tensor feats = oracle::rand_tensor(rng, {3, 1, 4, 4});
    LivtEmbeddings emb = toy.encode(feats);
    CHECK(oracle::max_abs_diff(emb.q, feats) == 0.0); // identity center tap
    for (std::int64_t i = 0; i < emb.k.numel(); ++i) CHECK(emb.k[i] == 0.0f);

    // Production-shaped heads agree with the convolution reference.
    WeightStore prod = seeded_upsampler_store(16, 3, 10, 7);
    LivtUpsampler up(prod, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    Tensor trunk = oracle::rand_tensor(rng, {4, 64, 5, 5});
    LivtEmbeddings pe = up.encode(trunk);
    Tensor want = oracle::conv3d(trunk, prod.get("u0.qkv.q.weight"), prod.get("u0.qkv.q.bias"), 1, 1);
    REQUIRE(pe.q.same_shape(want));
    CHECK(oracle::max_abs_diff(pe.q, want) < 1e-5);
}

TEST_CASE("decoding with all-zero weights returns zero RGB") {
    WeightStore store;
    for (const evsr::WeightSpec &spec : evsr::livt_weight_shapes("u0", 16, 3, 10))
        store.put(spec.name, Tensor(spec.shape));
    LivtUpsampler up(store, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    std::mt19937 rng(54);
    Tensor trunk = oracle::rand_tensor(rng, {5, 64, 4, 4});
    LivtEmbeddings emb = up.encode(trunk);
    TimestampGrid grid = TimestampGrid::uniform(3);
    std::array<float, 3> rgb = up.decode_query(emb, grid, 0.4, 0.6, 0.3);
    CHECK(rgb[0] == 0.0f);
    CHECK(rgb[1] == 0.0f);
    CHECK(rgb[2] == 0.0f);
}

TEST_CASE("coordinate identity: scale-1 queries at input timestamps round-trip") {
    // Identity Q head + query-passthrough MLP: each scale-1 pixel-center query
    // at tau in {0, 1} must reproduce gelu^4 of the stored feature exactly.
    WeightStore store = passthrough_store(3);
    LivtUpsampler toy(store, "toy", 1, LocalGridSpec{3, 3, 3}, 1);
    std::mt19937 rng(55);
    const int h = 4, w = 4;
    Tensor feats = oracle::rand_tensor(rng, {3, 1, h, w});
    LivtEmbeddings emb = toy.encode(feats);
    TimestampGrid grid = TimestampGrid::uniform(1);

    for (double tau : {0.0, 1.0}) {
        const int slice = tau == 0.0 ? 0 : 2;
        Tensor frame = toy.render_frame(emb, grid, tau, h, w);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                float v = feats.at(slice, 0, i, j);
                for (int k = 0; k < 4; ++k) v = evsr::gelu_scalar(v);
                for (int c = 0; c < 3; ++c) CHECK(frame.at(c, i, j) == v);
            }
    }
}

TEST_CASE("render shapes, determinism, and per-pixel equality") {
    WeightStore store = seeded_upsampler_store(16, 3, 10, 42);
    LivtUpsampler up(store, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    std::mt19937 rng(56);
    Tensor trunk = oracle::rand_tensor(rng, {5, 64, 4, 4});
    LivtEmbeddings emb = up.encode(trunk);
    TimestampGrid grid = TimestampGrid::uniform(3);

    for (double s : {1.0, 2.0, 2.5, 4.0}) {
        const int out = static_cast<int>(std::lround(4 * s));
        Tensor frame = up.render_frame(emb, grid, 0.3, out, out);
        REQUIRE(frame.shape() == std::vector<int>{3, out, out});
        CHECK(frame.all_finite());
    }

    Tensor a = up.render_frame(emb, grid, 0.7, 6, 5);
    Tensor b = up.render_frame(emb, grid, 0.7, 6, 5);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<size_t>(a.numel())) == 0);

    // Batch rendering equals one-query-at-a-time decoding bit for bit.
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 5; ++j) {
            std::array<float, 3> rgb = up.decode_query(emb, grid, 0.7, (j + 0.5) / 5, (i + 0.5) / 6);
            for (int c = 0; c < 3; ++c) CHECK(a.at(c, i, j) == rgb[static_cast<size_t>(c)]);
        }
}

TEST_CASE("full decode chain matches the straight-line reference") {
    WeightStore store = seeded_upsampler_store(16, 3, 10, 42);
    const LocalGridSpec spec{3, 3, 3};
    LivtUpsampler up(store, "u0", 16, spec, 10);
    std::mt19937 rng(57);
    Tensor trunk = oracle::rand_tensor(rng, {5, 64, 4, 4});
    LivtEmbeddings emb = up.encode(trunk);
    TimestampGrid grid = TimestampGrid::uniform(3);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double tau = unit(rng), x = unit(rng), y = unit(rng);
        std::array<float, 3> got = up.decode_query(emb, grid, tau, x, y);
        std::array<double, 3> want = reference_decode(store, emb, grid, tau, x, y, 16, spec, 10);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(got[static_cast<size_t>(c)] - want[static_cast<size_t>(c)]) < 1e-4);
    }

    // Whole upsampled frame against the reference, one query per pixel.
    const double tau = 0.37;
    Tensor frame = up.render_frame(emb, grid, tau, 8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            std::array<double, 3> want =
                reference_decode(store, emb, grid, tau, (j + 0.5) / 8, (i + 0.5) / 8, 16, spec, 10);
            for (int c = 0; c < 3; ++c) CHECK(std::abs(frame.at(c, i, j) - want[static_cast<size_t>(c)]) < 1e-4);
        }
}

TEST_CASE("decoded output is continuous in tau away from window switches") {
    WeightStore store = seeded_upsampler_store(16, 3, 10, 9);
    LivtUpsampler up(store, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    std::mt19937 rng(58);
    Tensor trunk = oracle::rand_tensor(rng, {9, 64, 4, 4});
    LivtEmbeddings emb = up.encode(trunk);
    TimestampGrid grid = TimestampGrid::uniform(7);

    const double eps = 1e-4;
    for (double tau : {0.2, 0.3, 0.55, 0.81}) {
        REQUIRE(evsr::select_timestamps(grid, tau, 3) == evsr::select_timestamps(grid, tau + eps, 3));
        std::array<float, 3> a = up.decode_query(emb, grid, tau, 0.4, 0.6);
        std::array<float, 3> b = up.decode_query(emb, grid, tau + eps, 0.4, 0.6);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(a[static_cast<size_t>(c)] - b[static_cast<size_t>(c)]) < 1e-2);
    }
}

TEST_CASE("query and encode cost calibration") {
    WeightStore s16 = seeded_upsampler_store(16, 3, 10, 1);
    WeightStore s64;
    evsr::seeded_fill(s64, evsr::livt_weight_shapes("u0", 64, 3, 10), 1);
    LivtUpsampler u16(s16, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    LivtUpsampler u64(s64, "u0", 64, LocalGridSpec{3, 3, 3}, 10);

    const double q16 = u16.per_query_madds(9, 8, 8);
    const double q64 = u64.per_query_madds(9, 8, 8);
    CHECK(q16 > 0.0);
    CHECK(q64 > q16); // wider attention/MLP input costs more per query
    // Shape-pure: repeated calls agree.
    CHECK(u16.per_query_madds(9, 8, 8) == q16);

    // QKV cost is exactly three 3x3x3 convolutions from 64 channels to C.
    const double e16 = u16.encode_madds(9, 64, 8, 8);
    CHECK(e16 == 3.0 * (9.0 * 16 * 8 * 8) * 64 * 27);
    CHECK_THROWS_AS(u16.encode_madds(9, 16, 8, 8), std::invalid_argument);
}

TEST_CASE("upsampler constructor rejects inconsistent stores") {
    WeightStore store = seeded_upsampler_store(16, 3, 10, 3);
    const LocalGridSpec cube{3, 3, 3};
    const LocalGridSpec wide_time{5, 3, 3};
    CHECK_THROWS_AS(LivtUpsampler(store, "u0", 64, cube, 10), std::invalid_argument);
    CHECK_THROWS_AS(LivtUpsampler(store, "u0", 16, cube, 4), std::invalid_argument);
    CHECK_THROWS_AS(LivtUpsampler(store, "u0", 16, wide_time, 10), std::invalid_argument);
    CHECK_THROWS_AS(LivtUpsampler(store, "u1", 16, cube, 10), std::invalid_argument);

    // Grid length must match the embedding's time extent at decode time.
    LivtUpsampler up(store, "u0", 16, LocalGridSpec{3, 3, 3}, 10);
    LivtEmbeddings emb = up.encode(Tensor({5, 64, 4, 4}));
    TimestampGrid grid = TimestampGrid::uniform(7);
    CHECK_THROWS_AS(up.decode_query(emb, grid, 0.5, 0.5, 0.5), std::invalid_argument);
}
