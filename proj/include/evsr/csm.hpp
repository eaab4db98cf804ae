#pragma once

#include <string>
#include <vector>

#include "evsr/events.hpp"
#include "evsr/tensor.hpp"

namespace evsr {

// Per-output-pixel reconstruction difficulty in [0,1], derived purely from event
// counts inside [tau_lo, tau_hi] (the span of the selected timestamp window).
struct DifficultyMap {
    Tensor values; // (outH, outW)
    double tau_lo = 0.0;
    double tau_hi = 0.0;
};

// Ascending trigger thresholds xi_1..xi_{N-1}; xi_0 = 0 and xi_N = 1 are implicit.
// N = pathways() upsamplers share the [0,1] difficulty range as half-open
// intervals (xi_n, xi_{n+1}], with difficulty 0 assigned to pathway 0.
struct ThresholdLadder {
    std::vector<double> xis;

    int pathways() const { return static_cast<int>(xis.size()) + 1; }
    void validate() const; // throws std::invalid_argument on order/range violations
};

// Pathway index per output pixel; a partition by construction (one index each).
struct DistributionMask {
    std::vector<int> pathway; // row-major (height x width)
    int height = 0;
    int width = 0;

    int at(int y, int x) const { return pathway[static_cast<size_t>(y) * width + x]; }
    std::vector<std::int64_t> counts(int n_pathways) const;
};

// Cost summary for one routed frame: per-pathway pixel counts and the total
// multiply-add estimate Sum_n count_n * cost_n + shared.
struct BudgetReport {
    std::vector<std::int64_t> counts;
    std::vector<double> fractions;
    std::vector<double> pathway_cost; // count_n * cost_n
    double shared_cost = 0.0;
    double total_cost = 0.0;
};

// |Sum p_r| per pixel over events with timestamp in [tau_lo, tau_hi].
// The contrast threshold cancels under the later min-max normalization, so it
// is never multiplied in.
Tensor intensity_change(const EventStream &stream, double tau_lo, double tau_hi);

// (v - min)/(max - min); a constant field maps to all zeros (nothing changed
// anywhere means everything is equally easy).
Tensor minmax_normalize(const Tensor &change);

// Full difficulty chain: intensity change over [min(taus), max(taus)], min-max
// normalized, bilinearly resized to (out_h, out_w), clamped to [0,1].
DifficultyMap difficulty(const EventStream &stream, const std::vector<double> &taus, int out_h, int out_w);

// Threshold routing: difficulty R goes to the unique n with R in (xi_n, xi_{n+1}];
// R = 0 goes to pathway 0; exact ties at xi_n resolve to the lower pathway.
DistributionMask distribute(const DifficultyMap &diff, const ThresholdLadder &ladder);

// per_pixel_cost[n] = multiply-adds one pathway-n query costs (ledger calibrated).
BudgetReport budget_report(const DistributionMask &mask, const std::vector<double> &per_pixel_cost,
                           double shared_cost);

// 8-bit grayscale exports: difficulty scaled x255; mask pathways spread over
// distinct gray levels (0 and 255 for two pathways).
void write_difficulty_pgm(const DifficultyMap &diff, const std::string &path);
void write_mask_pgm(const DistributionMask &mask, int n_pathways, const std::string &path);

} // namespace evsr
