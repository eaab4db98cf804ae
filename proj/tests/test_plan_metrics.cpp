#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsr/metrics.hpp"
#include "evsr/tensor.hpp"
#include "evsr/train_plan.hpp"
#include "evsr/weights.hpp"
#include "oracle.hpp"

namespace {

using evsr::Tensor;
using evsr::TensorPlan;
using evsr::TrainPlan;

constexpr std::array<long long, 3> kPublished{450000, 150000, 150000};

bool all_match(const std::vector<TensorPlan> &tensors, bool random, int from_stage, int from_network, bool frozen,
               const std::string &prefix) {
    bool any = false;
    for (const TensorPlan &t : tensors) {
        if (t.name.rfind(prefix, 0) != 0) continue;
        any = true;
        if (t.random != random || t.frozen != frozen) return false;
        if (!random && (t.from_stage != from_stage || t.from_network != from_network)) return false;
    }
    return any;
}

Tensor uniform_frame(int h, int w, float value) {
    Tensor frame({3, h, w});
    for (std::int64_t i = 0; i < frame.numel(); ++i) frame[i] = value;
    return frame;
}

} // namespace

TEST_CASE("single-pathway plan has two stages and keeps stage-2 weights") {
    TrainPlan plan = evsr::build_plan(1, kPublished, 8, 42);
    CHECK(plan.n_pathways == 1);
    REQUIRE(plan.stages.size() == 2);
    CHECK(plan.stages[0].stage == 1);
    CHECK(plan.stages[1].stage == 2);
    CHECK(plan.notes.empty());

    const size_t catalog = evsr::easm_weight_shapes().size() + evsr::livt_weight_shapes("u0", 16, 3, 10).size();
    CHECK(plan.final_map.size() == catalog);
    for (const TensorPlan &t : plan.final_map) {
        CHECK(t.from_stage == 2);
        CHECK(t.from_network == 0);
        CHECK_FALSE(t.frozen);
    }
    CHECK_NOTHROW(evsr::validate_plan(plan));
}

TEST_CASE("two-pathway plan matches the published schedule") {
    TrainPlan plan = evsr::build_plan(2, kPublished, 8, 42);
    REQUIRE(plan.stages.size() == 3);

    const evsr::StagePlan &s1 = plan.stages[0];
    CHECK(s1.iterations == 450000);
    CHECK(s1.t_fix == 8);
    CHECK(s1.s_fixed);
    CHECK(s1.s_value == 4.0);
    REQUIRE(s1.networks.size() == 2);
    for (const evsr::NetworkPlan &net : s1.networks) {
        CHECK(all_match(net.tensors, true, 0, 0, false, "easm."));
        CHECK(all_match(net.tensors, true, 0, 0, false, "u" + std::to_string(net.network) + "."));
    }

    const evsr::StagePlan &s2 = plan.stages[1];
    CHECK(s2.iterations == 150000);
    CHECK_FALSE(s2.s_fixed);
    CHECK(s2.s_lo == 1.0);
    CHECK(s2.s_hi == 4.0);
    REQUIRE(s2.networks.size() == 2);
    for (const evsr::NetworkPlan &net : s2.networks) {
        CHECK(all_match(net.tensors, false, 1, net.network, false, "easm."));
        CHECK(all_match(net.tensors, false, 1, net.network, false, "u" + std::to_string(net.network) + "."));
    }

    const evsr::StagePlan &s3 = plan.stages[2];
    CHECK(s3.iterations == 150000);
    REQUIRE(s3.networks.size() == 1);
    CHECK(s3.networks[0].network == 0);
    CHECK(all_match(s3.networks[0].tensors, false, 2, 1, true, "easm."));
    CHECK(all_match(s3.networks[0].tensors, false, 2, 0, false, "u0."));

    CHECK(all_match(plan.final_map, false, 2, 1, false, "easm."));
    CHECK(all_match(plan.final_map, false, 3, 0, false, "u0."));
    CHECK(all_match(plan.final_map, false, 2, 1, false, "u1."));
    REQUIRE(plan.notes.size() == 1);
    CHECK(plan.notes[0].find("frozen") != std::string::npos);
}

TEST_CASE("three-pathway fine-tune covers exactly the simpler upsamplers") {
    TrainPlan plan = evsr::build_plan(3, kPublished, 8, 7);
    REQUIRE(plan.stages.size() == 3);
    const evsr::StagePlan &s3 = plan.stages[2];
    REQUIRE(s3.networks.size() == 2);
    for (int n = 0; n < 2; ++n) {
        CHECK(s3.networks[static_cast<size_t>(n)].network == n);
        CHECK(all_match(s3.networks[static_cast<size_t>(n)].tensors, false, 2, 2, true, "easm."));
        CHECK(all_match(s3.networks[static_cast<size_t>(n)].tensors, false, 2, n, false,
                        "u" + std::to_string(n) + "."));
    }
    CHECK(all_match(plan.final_map, false, 2, 2, false, "easm."));
    CHECK(all_match(plan.final_map, false, 3, 0, false, "u0."));
    CHECK(all_match(plan.final_map, false, 3, 1, false, "u1."));
    CHECK(all_match(plan.final_map, false, 2, 2, false, "u2."));
}

TEST_CASE("plans are pure functions and record seeded scale previews") {
    TrainPlan a = evsr::build_plan(2, kPublished, 8, 7);
    TrainPlan b = evsr::build_plan(2, kPublished, 8, 7);
    CHECK(evsr::plan_to_text(a) == evsr::plan_to_text(b));

    // The preview draws come from a generator keyed on the seed alone.
    auto draws = [](std::uint64_t key) {
        std::mt19937_64 rng(key);
        std::vector<double> out;
        for (int i = 0; i < 8; ++i) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            out.push_back(1.0 + 3.0 * u);
        }
        return out;
    };
    CHECK(a.stages[1].s_preview == draws(7ull ^ 0x5731ull));
    CHECK(a.stages[2].s_preview == draws(7ull ^ 0x9d2cull));
    for (double s : a.stages[1].s_preview) {
        CHECK(s >= 1.0);
        CHECK(s <= 4.0);
    }

    TrainPlan c = evsr::build_plan(2, kPublished, 8, 8);
    CHECK(a.stages[1].s_preview != c.stages[1].s_preview);
}

TEST_CASE("validate_plan rejects tampered schedules") {
    TrainPlan plan = evsr::build_plan(2, kPublished, 8, 42);

    TrainPlan bad = plan;
    bad.stages[0].networks[0].tensors[0].random = false;
    CHECK_THROWS_AS(evsr::validate_plan(bad), std::logic_error);

    bad = plan;
    bad.stages[2].networks[0].tensors[0].frozen = false; // extractor must stay frozen
    CHECK_THROWS_AS(evsr::validate_plan(bad), std::logic_error);

    bad = plan;
    for (TensorPlan &t : bad.stages[2].networks[0].tensors)
        if (t.name.rfind("u0.", 0) == 0) t.frozen = true; // upsampler must stay updatable
    CHECK_THROWS_AS(evsr::validate_plan(bad), std::logic_error);

    bad = plan;
    bad.stages[1].networks[0].tensors[0].from_network = 5;
    CHECK_THROWS_AS(evsr::validate_plan(bad), std::logic_error);

    bad = plan;
    bad.final_map[0].from_stage = 3; // stage 3 never produces extractor tensors under network 1
    CHECK_THROWS_AS(evsr::validate_plan(bad), std::logic_error);
}

TEST_CASE("build_plan rejects invalid pathway and iteration counts") {
    CHECK_THROWS_AS(evsr::build_plan(0, kPublished, 8, 42), std::invalid_argument);
    const std::array<long long, 3> negative{100, -1, 100};
    CHECK_THROWS_AS(evsr::build_plan(2, negative, 8, 42), std::invalid_argument);
}

TEST_CASE("plan text lists stages, sources, freezes, and notes") {
    TrainPlan plan = evsr::build_plan(2, kPublished, 8, 42);
    const std::string text = evsr::plan_to_text(plan);
    CHECK(text.rfind("train-plan pathways=2 seed=42\n", 0) == 0);
    CHECK(text.find("stage 1 iterations=450000 t=fix:8 s=fix:4\n") != std::string::npos);
    CHECK(text.find("stage 2 iterations=150000 t=fix:8 s=uniform:1..4 draws=") != std::string::npos);
    CHECK(text.find(" [frozen]\n") != std::string::npos);
    CHECK(text.find("<- random\n") != std::string::npos);
    CHECK(text.find("<- stage2.network1") != std::string::npos);
    CHECK(text.find("\nfinal\n") != std::string::npos);
    CHECK(text.find("note: ") != std::string::npos);
}

TEST_CASE("charbonnier floors at sqrt(eps2) exactly on identical tensors") {
    std::mt19937 rng(3);
    Tensor t = oracle::rand_tensor(rng, {3, 4, 5});
    CHECK(evsr::charbonnier(t, t) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(evsr::charbonnier(t, t, 4e-2) == doctest::Approx(0.2).epsilon(1e-12));

    Tensor nudged = t;
    nudged[0] += 1e-3f;
    CHECK(evsr::charbonnier(nudged, t) > 1e-3);
}

TEST_CASE("charbonnier worked example and shape contract") {
    Tensor pred({1}, {3.0f});
    Tensor target({1}, {0.0f});
    CHECK(evsr::charbonnier(pred, target) == doctest::Approx(3.0000002).epsilon(1e-7));

    Tensor wide({2}, {0.0f, 0.0f});
    CHECK_THROWS_AS(evsr::charbonnier(pred, wide), std::invalid_argument);
}

TEST_CASE("charbonnier matches the elementwise oracle on random tensors") {
    std::mt19937 rng(11);
    Tensor pred = oracle::rand_tensor(rng, {3, 6, 5});
    Tensor target = oracle::rand_tensor(rng, {3, 6, 5});
    long double sum = 0.0L;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        const long double d = static_cast<long double>(pred[i]) - target[i];
        sum += std::sqrt(d * d + 1e-6L);
    }
    const double want = static_cast<double>(sum / pred.numel());
    CHECK(evsr::charbonnier(pred, target) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("luma applies the 601 weights and validates shape") {
    // Channel-plane layout: r = {1.0, 0.0}, g = {0.0, 1.0}, b = {0.5, 0.25}.
    Tensor frame({3, 1, 2}, {1.0f, 0.0f, 0.0f, 1.0f, 0.5f, 0.25f});
    Tensor y = evsr::luma(frame);
    CHECK(y.at(0, 0) == doctest::Approx(0.299 * 1.0 + 0.114 * 0.5).epsilon(1e-7));
    CHECK(y.at(0, 1) == doctest::Approx(0.587 * 1.0 + 0.114 * 0.25).epsilon(1e-7));

    Tensor gray({1, 2, 2});
    CHECK_THROWS_AS(evsr::luma(gray), std::invalid_argument);
}

TEST_CASE("psnr returns the infinity sentinel and the 20 dB gray example") {
    Tensor gray_a = uniform_frame(6, 6, 0.4f);
    CHECK(std::isinf(evsr::psnr_y(gray_a, gray_a)));

    Tensor gray_b = uniform_frame(6, 6, 0.5f);
    CHECK(evsr::psnr_y(gray_a, gray_b) == doctest::Approx(20.0).epsilon(1e-4));

    Tensor small = uniform_frame(5, 6, 0.4f);
    CHECK_THROWS_AS(evsr::psnr_y(gray_a, small), std::invalid_argument);
}

TEST_CASE("psnr matches the reference formula on random frames") {
    std::mt19937 rng(17);
    Tensor pred = oracle::rand_tensor(rng, {3, 12, 10}, 0.0f, 1.0f);
    Tensor target = oracle::rand_tensor(rng, {3, 12, 10}, 0.0f, 1.0f);
    CHECK(evsr::psnr_y(pred, target) == doctest::Approx(oracle::psnr_y(pred, target)).epsilon(1e-5));
}

TEST_CASE("ssim is exactly one on identical frames and below one otherwise") {
    std::mt19937 rng(19);
    Tensor frame = oracle::rand_tensor(rng, {3, 9, 8}, 0.0f, 1.0f);
    CHECK(evsr::ssim_y(frame, frame) == 1.0);

    Tensor other = frame;
    for (std::int64_t i = 0; i < other.numel(); ++i) other[i] = std::min(1.0f, other[i] + 0.05f);
    const double score = evsr::ssim_y(frame, other);
    CHECK(score < 1.0);
    CHECK(score > 0.0);

    // Truncated border windows keep tiny frames well-defined.
    Tensor tiny = oracle::rand_tensor(rng, {3, 3, 3}, 0.0f, 1.0f);
    CHECK(evsr::ssim_y(tiny, tiny) == 1.0);

    Tensor mismatched = oracle::rand_tensor(rng, {3, 4, 3}, 0.0f, 1.0f);
    CHECK_THROWS_AS(evsr::ssim_y(tiny, mismatched), std::invalid_argument);
}

TEST_CASE("ssim matches the windowed reference on random frames") {
    std::mt19937 rng(23);
    Tensor pred = oracle::rand_tensor(rng, {3, 12, 10}, 0.0f, 1.0f);
    Tensor target = oracle::rand_tensor(rng, {3, 12, 10}, 0.0f, 1.0f);
    CHECK(evsr::ssim_y(pred, target) == doctest::Approx(oracle::ssim_y(pred, target)).epsilon(1e-5));
}
