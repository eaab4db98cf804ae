#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evsr/tensor.hpp"

namespace evsr {

// Flat container of named parameter tensors. Names use a dotted scheme, e.g.
// "easm.feat.frame.conv0.weight" or "u0.qkv.q.weight"; the shape catalogs below
// are the single source of truth for which names exist.
class WeightStore {
  public:
    bool contains(const std::string &name) const { return entries_.count(name) != 0; }
    const Tensor &get(const std::string &name) const;
    void put(const std::string &name, Tensor tensor);

    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> names() const;

    // True when any stored name starts with `prefix`.
    bool has_prefix(const std::string &prefix) const;

    // Binary round trip (magic "WTS1"): u32 count, then per entry
    // u32 name length, name bytes, u32 rank, u32 extents[rank], f32 payload (LE).
    void save(const std::string &path) const;
    static WeightStore load(const std::string &path);

  private:
    std::map<std::string, Tensor> entries_; // ordered: deterministic save order
};

// Catalog entry: tensor name plus its required shape. fan_in = 0 means
// "derive from shape" (product of all extents but the first); bias entries
// carry their layer's fan_in explicitly so init scales match the weight.
struct WeightSpec {
    std::string name;
    std::vector<int> shape;
    int fan_in = 0;
};

// Shapes for the alignment/compensation backbone (fixed 64-channel trunk, M segments).
std::vector<WeightSpec> easm_weight_shapes();

// Shapes for one implicit upsampler with `channels` attention width, named under
// `prefix` (e.g. "u0"), for a t_g x h_g x w_g local attention grid and `pe_levels`
// positional-encoding frequencies.
std::vector<WeightSpec> livt_weight_shapes(const std::string &prefix, int channels, int t_g, int pe_levels);

// Deterministic fallback when no weight file is supplied: every tensor is filled
// i.i.d. uniform in [-a, a], a = 1/sqrt(fan_in), from an mt19937_64 keyed by
// seed XOR FNV-1a(name) so each tensor's values are independent of catalog order.
void seeded_fill(WeightStore &store, const std::vector<WeightSpec> &specs, std::uint64_t seed);

std::uint64_t fnv1a64(const std::string &text);

} // namespace evsr
