#include "evsr/csm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "evsr/kernels.hpp"

namespace evsr {

void ThresholdLadder::validate() const {
    double prev = 0.0;
    for (double xi : xis) {
        if (xi < 0.0 || xi > 1.0)
            throw std::invalid_argument("threshold ladder: xi = " + std::to_string(xi) + " outside [0, 1]");
        if (xi < prev) throw std::invalid_argument("threshold ladder: thresholds must ascend");
        prev = xi;
    }
}

std::vector<std::int64_t> DistributionMask::counts(int n_pathways) const {
    std::vector<std::int64_t> out(static_cast<size_t>(n_pathways), 0);
    for (int p : pathway) ++out[static_cast<size_t>(p)];
    return out;
}

Tensor intensity_change(const EventStream &stream, double tau_lo, double tau_hi) {
    if (tau_lo > tau_hi)
        throw std::invalid_argument("intensity_change: inverted window [" + std::to_string(tau_lo) + ", " +
                                    std::to_string(tau_hi) + "]");
    Tensor sums({stream.height, stream.width});
    for (const EventRecord &r : stream.records) {
        if (r.timestamp < tau_lo || r.timestamp > tau_hi) continue;
        sums.at(r.y, r.x) += static_cast<float>(r.polarity);
    }
    Tensor out({stream.height, stream.width});
    for (std::int64_t i = 0; i < sums.numel(); ++i) out[i] = std::abs(sums[i]);
    return out;
}

Tensor minmax_normalize(const Tensor &change) {
    float lo = change[0], hi = change[0];
    for (std::int64_t i = 1; i < change.numel(); ++i) {
        lo = std::min(lo, change[i]);
        hi = std::max(hi, change[i]);
    }
    Tensor out(change.shape());
    if (hi == lo) return out; // constant field: all easy
    const double span = static_cast<double>(hi) - lo;
    for (std::int64_t i = 0; i < change.numel(); ++i)
        out[i] = static_cast<float>((change[i] - lo) / span);
    return out;
}

DifficultyMap difficulty(const EventStream &stream, const std::vector<double> &taus, int out_h, int out_w) {
    if (taus.empty()) throw std::invalid_argument("difficulty: timestamp set is empty");
    const auto [lo_it, hi_it] = std::minmax_element(taus.begin(), taus.end());
    // Timestamps are normalized clip positions; map to stream seconds.
    const double span = stream.tau_e - stream.tau_s;
    DifficultyMap map;
    map.tau_lo = stream.tau_s + *lo_it * span;
    map.tau_hi = stream.tau_s + *hi_it * span;

    Tensor change = intensity_change(stream, map.tau_lo, map.tau_hi);
    Tensor normalized = minmax_normalize(change);
    Tensor scaled = (out_h == stream.height && out_w == stream.width)
                        ? normalized
                        : resize_bilinear(normalized, out_h, out_w);
    for (std::int64_t i = 0; i < scaled.numel(); ++i) scaled[i] = std::clamp(scaled[i], 0.0f, 1.0f);
    map.values = std::move(scaled);
    return map;
}

DistributionMask distribute(const DifficultyMap &diff, const ThresholdLadder &ladder) {
    ladder.validate();
    DistributionMask mask;
    mask.height = diff.values.extent(0);
    mask.width = diff.values.extent(1);
    mask.pathway.resize(static_cast<size_t>(mask.height) * mask.width, 0);

    const int n = ladder.pathways();
    for (std::int64_t i = 0; i < diff.values.numel(); ++i) {
        const double r = diff.values[i];
        int chosen = 0;
        if (r > 0.0) {
            // R falls in (xi_k, xi_{k+1}]: count thresholds strictly below R.
            chosen = n - 1;
            for (int k = 0; k < n - 1; ++k)
                if (r <= ladder.xis[static_cast<size_t>(k)]) {
                    chosen = k;
                    break;
                }
        }
        mask.pathway[static_cast<size_t>(i)] = chosen;
    }
    return mask;
}

BudgetReport budget_report(const DistributionMask &mask, const std::vector<double> &per_pixel_cost,
                           double shared_cost) {
    for (double c : per_pixel_cost)
        if (c < 0.0) throw std::invalid_argument("budget_report: costs must be non-negative");
    const int n = static_cast<int>(per_pixel_cost.size());
    BudgetReport report;
    report.counts = mask.counts(n);
    report.shared_cost = shared_cost;
    report.total_cost = shared_cost;
    const double pixels = static_cast<double>(mask.pathway.size());
    for (int i = 0; i < n; ++i) {
        const double cost = static_cast<double>(report.counts[static_cast<size_t>(i)]) *
                            per_pixel_cost[static_cast<size_t>(i)];
        report.pathway_cost.push_back(cost);
        report.fractions.push_back(pixels > 0.0 ? report.counts[static_cast<size_t>(i)] / pixels : 0.0);
        report.total_cost += cost;
    }
    return report;
}

namespace {

void write_pgm(const std::vector<unsigned char> &gray, int h, int w, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char *>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

void write_difficulty_pgm(const DifficultyMap &diff, const std::string &path) {
    const int h = diff.values.extent(0), w = diff.values.extent(1);
    std::vector<unsigned char> gray(static_cast<size_t>(h) * w);
    for (std::int64_t i = 0; i < diff.values.numel(); ++i)
        gray[static_cast<size_t>(i)] =
            static_cast<unsigned char>(std::lround(std::clamp(diff.values[i], 0.0f, 1.0f) * 255.0f));
    write_pgm(gray, h, w, path);
}

void write_mask_pgm(const DistributionMask &mask, int n_pathways, const std::string &path) {
    std::vector<unsigned char> gray(mask.pathway.size());
    for (size_t i = 0; i < mask.pathway.size(); ++i) {
        const int level = n_pathways > 1 ? mask.pathway[i] * 255 / (n_pathways - 1) : 0;
        gray[i] = static_cast<unsigned char>(level);
    }
    write_pgm(gray, mask.height, mask.width, path);
}

} // namespace evsr
