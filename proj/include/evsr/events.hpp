#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evsr/tensor.hpp"

namespace evsr {

// One sensor event: a signed brightness change at (x, y) observed at `timestamp` seconds.
struct EventRecord {
    double timestamp = 0.0;
    int x = 0;
    int y = 0;
    int polarity = 1; // +1 or -1
};

// A clip-aligned event stream. The duration endpoints coincide with the two
// input frame timestamps, so normalized time 0 is the first frame and 1 the second.
struct EventStream {
    double tau_s = 0.0;
    double tau_e = 1.0;
    int height = 0;
    int width = 0;
    std::optional<double> contrast_threshold; // sensor metadata, carried but never applied
    std::vector<EventRecord> records;         // sorted by timestamp

    // Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

// Signed voxel grid: M+1 temporal bins of shape (H, W) built by tent-weighted splatting.
struct VoxelGrid {
    Tensor bins; // (M+1, H, W)
    int m = 0;   // bin-partition parameter M

    int height() const { return bins.extent(1); }
    int width() const { return bins.extent(2); }
};

enum class Direction { forward, backward };

// M segments, each stacking two consecutive bins: segment m = (bin m, bin m+1).
struct EventSegments {
    Tensor segments; // (M, 2, H, W)
    Direction direction = Direction::forward;

    int count() const { return segments.extent(0); }
};

// Splat every event onto the two nearest temporal bins with tent weights
// w(b) = max(0, 1 - |b - M*(tau - tau_s)/(tau_e - tau_s)|), b = 0..M.
// Accumulates in double so the result matches a direct per-pixel sum to float precision.
VoxelGrid voxelize(const EventStream &stream, int m);

// Hot-pixel suppression: eta = nearest-rank 98th percentile of |v| over non-zero
// entries, output = clamp(v, -eta, +eta)/eta. All-zero grids pass through unchanged.
VoxelGrid normalize(const VoxelGrid &grid);

// Pair consecutive bins into M two-channel segments (forward direction).
EventSegments to_segments(const VoxelGrid &grid);

// Time/polarity reversal: (tau, x, y, p) -> (tau_s + tau_e - tau, x, y, -p), re-sorted.
EventStream reverse(const EventStream &stream);

// Line-oriented text format: header "H W tau_s tau_e", then "timestamp x y polarity" per line.
EventStream read_events_text(const std::string &path);
void write_events_text(const EventStream &stream, const std::string &path);

// Packed little-endian binary: magic "EVT1", u32 H, u32 W, f64 tau_s, f64 tau_e,
// u64 count, then per record f64 timestamp, i32 x, i32 y, i32 polarity.
EventStream read_events_binary(const std::string &path);
void write_events_binary(const EventStream &stream, const std::string &path);

// Dispatch on the EVT1 magic; falls back to the text reader.
EventStream read_events(const std::string &path);

} // namespace evsr
