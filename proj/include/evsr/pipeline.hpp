#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evsr/csm.hpp"
#include "evsr/events.hpp"
#include "evsr/tensor.hpp"
#include "evsr/weights.hpp"

namespace evsr {

// Everything the forward pipeline needs, with defaults matching the published
// operating point: 7 segments, 3x3x3 attention grid, two pathways (16 and 64
// channels) split at threshold 0, 10 encoding frequencies.
struct PipelineConfig {
    int m = 7;
    int t_g = 3, h_g = 3, w_g = 3;
    int pathways = 2;
    std::vector<int> channels = {16, 64};    // one width per pathway, ascending complexity
    std::vector<double> thresholds = {0.0};  // xi_1..xi_{N-1}
    double scale_s = 4.0;
    int scale_t = 8;
    std::string weights_path;                // empty: deterministic seeded init
    std::uint64_t seed = 42;
    int pe_levels = 10;

    void validate() const; // throws std::invalid_argument naming the bad field

    // Shared by the config-file parser and CLI overrides; unknown key throws.
    void set(const std::string &key, const std::string &value);

    // Flat "key = value" text; '#' starts a comment.
    static PipelineConfig from_file(const std::string &path);
};

// Load the configured weight file, or synthesize a seeded store covering the
// backbone and every configured pathway.
WeightStore resolve_weights(const PipelineConfig &config);

// Voxelize both stream directions at the stream's native resolution, bicubic-
// downsample the bins to the frame lattice when the two differ, normalize, and
// pair bins into segments.
struct PreparedSegments {
    EventSegments fwd, bwd;
};
PreparedSegments prepare_segments(const PipelineConfig &config, int frame_h, int frame_w,
                                  const EventStream &stream, OpLedger *ledger = nullptr);

// Single-pathway run: every output pixel goes through pathway `pathway_index`.
// Output: scale_t + 1 frames at timestamps k/scale_t, each (3, round(s*H), round(s*W)).
std::vector<Tensor> run_single(const PipelineConfig &config, const Tensor &frames, const EventStream &stream,
                               const WeightStore &store, int pathway_index, OpLedger *ledger = nullptr);

// Routed run: per output frame, the difficulty map picks each pixel's pathway;
// the budget aggregates pixel counts over all frames against ledger-calibrated
// per-query costs, plus the shared backbone/embedding cost.
struct RoutedResult {
    std::vector<Tensor> frames;
    std::vector<DifficultyMap> difficulty; // one per output frame
    std::vector<DistributionMask> masks;   // one per output frame
    BudgetReport budget;
};
RoutedResult run_routed(const PipelineConfig &config, const Tensor &frames, const EventStream &stream,
                        const WeightStore &store, OpLedger *ledger = nullptr);

} // namespace evsr
