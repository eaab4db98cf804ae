#include "evsr/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace evsr {

const Tensor &WeightStore::get(const std::string &name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("weight store: missing tensor '" + name + "'");
    return it->second;
}

void WeightStore::put(const std::string &name, Tensor tensor) {
    entries_.insert_or_assign(name, std::move(tensor));
}

std::vector<std::string> WeightStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto &[name, tensor] : entries_) out.push_back(name);
    return out;
}

bool WeightStore::has_prefix(const std::string &prefix) const {
    auto it = entries_.lower_bound(prefix);
    return it != entries_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

namespace {

template <typename T>
void put_le(std::ostream &out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream &in, const std::string &path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T)))
        throw std::runtime_error("truncated weight file: " + path);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void WeightStore::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight file: " + path);
    out.write("WTS1", 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto &[name, tensor] : entries_) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (int d = 0; d < tensor.rank(); ++d) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.extent(d)));
        for (std::int64_t i = 0; i < tensor.numel(); ++i) put_le<float>(out, tensor[i]);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

WeightStore WeightStore::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "WTS1", 4) != 0)
        throw std::runtime_error("not a WTS1 weight file: " + path);

    WeightStore store;
    const std::uint32_t count = get_le<std::uint32_t>(in, path);
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = get_le<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw std::runtime_error("truncated weight file: " + path);
        const std::uint32_t rank = get_le<std::uint32_t>(in, path);
        if (rank < 1 || rank > 5)
            throw std::runtime_error("weight file entry '" + name + "' has unsupported rank " +
                                     std::to_string(rank));
        std::vector<int> shape(rank);
        for (auto &ext : shape) ext = static_cast<int>(get_le<std::uint32_t>(in, path));
        Tensor tensor(shape);
        for (std::int64_t i = 0; i < tensor.numel(); ++i) tensor[i] = get_le<float>(in, path);
        store.put(name, std::move(tensor));
    }
    return store;
}

std::uint64_t fnv1a64(const std::string &text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

void seeded_fill(WeightStore &store, const std::vector<WeightSpec> &specs, std::uint64_t seed) {
    for (const WeightSpec &spec : specs) {
        int fan_in = spec.fan_in;
        if (fan_in == 0) {
            fan_in = 1;
            for (size_t d = 1; d < spec.shape.size(); ++d) fan_in *= spec.shape[d];
        }
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::mt19937_64 rng(seed ^ fnv1a64(spec.name));
        Tensor tensor(spec.shape);
        for (std::int64_t i = 0; i < tensor.numel(); ++i) {
            // Top 53 bits -> [0,1); avoids uniform_real_distribution's
            // implementation-defined sequences so files are portable.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            tensor[i] = static_cast<float>((2.0 * u - 1.0) * a);
        }
        store.put(spec.name, std::move(tensor));
    }
}

namespace {

// Appends .weight/.bias entries for one conv or linear layer; bias inherits the
// weight's fan_in so both draw from the same init interval.
void layer(std::vector<WeightSpec> &out, const std::string &name, std::vector<int> weight_shape) {
    int fan_in = 1;
    for (size_t d = 1; d < weight_shape.size(); ++d) fan_in *= weight_shape[d];
    const int outputs = weight_shape[0];
    out.push_back({name + ".weight", std::move(weight_shape), 0});
    out.push_back({name + ".bias", {outputs}, fan_in});
}

} // namespace

std::vector<WeightSpec> easm_weight_shapes() {
    constexpr int c = 64; // trunk width
    std::vector<WeightSpec> out;

    // Initial extractors: conv -> LeakyReLU -> residual block (conv, LeakyReLU, conv, skip).
    layer(out, "easm.feat.frame.conv0", {c, 3, 3, 3});
    layer(out, "easm.feat.frame.res0.conv0", {c, c, 3, 3});
    layer(out, "easm.feat.frame.res0.conv1", {c, c, 3, 3});
    layer(out, "easm.feat.event.conv0", {c, 2, 3, 3}); // segments carry 2 bins
    layer(out, "easm.feat.event.res0.conv0", {c, c, 3, 3});
    layer(out, "easm.feat.event.res0.conv1", {c, c, 3, 3});

    // Stride-2 pyramid builders (x1 -> x1/2 -> x1/4).
    layer(out, "easm.pyr.frame.down1", {c, c, 3, 3});
    layer(out, "easm.pyr.frame.down2", {c, c, 3, 3});
    layer(out, "easm.pyr.event.down1", {c, c, 3, 3});
    layer(out, "easm.pyr.event.down2", {c, c, 3, 3});

    // Per-level alignment: motion vector, event modulation, offsets, deformable conv.
    for (int level = 1; level <= 3; ++level) {
        const std::string p = "easm.align.l" + std::to_string(level);
        layer(out, p + ".mv.conv0", {c, 2 * c, 3, 3});
        layer(out, p + ".mv.conv1", {c, c, 3, 3});
        if (level < 3) layer(out, p + ".fuse_offset", {c, c + 18, 3, 3}); // MV + upsampled coarser offsets
        layer(out, p + ".emb.conv0", {2 * c, 2 * c, 3, 3});
        layer(out, p + ".emb.conv1", {2 * c, 2 * c, 3, 3}); // split: 64 gate, 64 residual
        layer(out, p + ".offset.conv0", {c, 2 * c, 3, 3});  // cat(modulated, raw MV)
        layer(out, p + ".offset.conv1", {18, c, 3, 3});     // 9 taps x (dy, dx)
        layer(out, p + ".dcn", {c, c, 3, 3});
        if (level < 3) layer(out, p + ".out", {c, 2 * c, 3, 3}); // cat(this level, upsampled coarser)
    }

    // Direction fusion: cat(forward m, backward M+1-m) -> 1x1 conv.
    layer(out, "easm.fuse.conv", {c, 2 * c, 1, 1});

    // Bidirectional recurrent compensation. Each direction: event-fusion conv +
    // channel-attention gate (reduction 4), then a gated update cell. The forward
    // cell also consumes the backward output, hence the wider input.
    for (const char *dir : {"b", "f"}) {
        const std::string p = std::string("easm.brc.") + dir;
        layer(out, p + ".att.conv", {c, 2 * c, 3, 3});
        layer(out, p + ".att.fc0", {c / 4, c});
        layer(out, p + ".att.fc1", {c, c / 4});
        const int cell_in = (dir[0] == 'f') ? 3 * c : 2 * c;
        layer(out, p + ".cell.z", {c, cell_in, 3, 3});
        layer(out, p + ".cell.cand", {c, cell_in, 3, 3});
    }
    return out;
}

std::vector<WeightSpec> livt_weight_shapes(const std::string &prefix, int channels, int t_g, int pe_levels) {
    constexpr int trunk = 64;
    constexpr int hidden = 256;
    const int pe_width = 2 * pe_levels * 3; // sin+cos per level, per (dt, dx, dy)
    std::vector<WeightSpec> out;

    for (const char *head : {"q", "k", "v"})
        layer(out, prefix + ".qkv." + head, {channels, trunk, 3, 3, 3});
    layer(out, prefix + ".bias_proj", {1, pe_width});

    // 5-layer decode MLP over cat(attention output over T_G slices, query embedding).
    const int mlp_in = t_g * channels + channels;
    layer(out, prefix + ".mlp.0", {hidden, mlp_in});
    layer(out, prefix + ".mlp.1", {hidden, hidden});
    layer(out, prefix + ".mlp.2", {hidden, hidden});
    layer(out, prefix + ".mlp.3", {hidden, hidden});
    layer(out, prefix + ".mlp.4", {3, hidden});
    return out;
}

} // namespace evsr
