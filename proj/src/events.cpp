#include "evsr/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evsr {

void EventStream::validate() const {
    if (!(tau_s < tau_e))
        throw std::invalid_argument("event stream: duration must satisfy tau_s < tau_e, got [" +
                                    std::to_string(tau_s) + ", " + std::to_string(tau_e) + "]");
    if (height < 1 || width < 1)
        throw std::invalid_argument("event stream: resolution must be positive, got " + std::to_string(height) +
                                    "x" + std::to_string(width));
    double prev = tau_s;
    for (size_t i = 0; i < records.size(); ++i) {
        const EventRecord &r = records[i];
        if (r.polarity != 1 && r.polarity != -1)
            throw std::invalid_argument("event stream: record " + std::to_string(i) + " has polarity " +
                                        std::to_string(r.polarity) + ", expected +1 or -1");
        if (r.x < 0 || r.x >= width || r.y < 0 || r.y >= height)
            throw std::invalid_argument("event stream: record " + std::to_string(i) + " at (" + std::to_string(r.x) +
                                        ", " + std::to_string(r.y) + ") outside " + std::to_string(width) + "x" +
                                        std::to_string(height));
        if (r.timestamp < tau_s || r.timestamp > tau_e)
            throw std::invalid_argument("event stream: record " + std::to_string(i) + " timestamp " +
                                        std::to_string(r.timestamp) + " outside duration");
        if (r.timestamp < prev)
            throw std::invalid_argument("event stream: records not sorted at index " + std::to_string(i));
        prev = r.timestamp;
    }
}

VoxelGrid voxelize(const EventStream &stream, int m) {
    if (m < 1) throw std::invalid_argument("voxelize: M must be >= 1, got " + std::to_string(m));
    stream.validate();

    const int h = stream.height, w = stream.width;
    std::vector<double> acc(static_cast<size_t>(m + 1) * h * w, 0.0);
    const double span = stream.tau_e - stream.tau_s;
    for (const EventRecord &r : stream.records) {
        const double pos = static_cast<double>(m) * (r.timestamp - stream.tau_s) / span;
        // Tent support covers at most two adjacent bins.
        const int lo = std::max(0, static_cast<int>(std::ceil(pos)) - 1);
        const int hi = std::min(m, static_cast<int>(std::floor(pos)) + 1);
        for (int b = lo; b <= hi; ++b) {
            const double weight = 1.0 - std::abs(static_cast<double>(b) - pos);
            if (weight <= 0.0) continue;
            acc[(static_cast<size_t>(b) * h + r.y) * w + r.x] += r.polarity * weight;
        }
    }

    VoxelGrid grid;
    grid.m = m;
    grid.bins = Tensor({m + 1, h, w});
    for (size_t i = 0; i < acc.size(); ++i) grid.bins[static_cast<std::int64_t>(i)] = static_cast<float>(acc[i]);
    return grid;
}

VoxelGrid normalize(const VoxelGrid &grid) {
    std::vector<float> magnitudes;
    magnitudes.reserve(static_cast<size_t>(grid.bins.numel()));
    for (std::int64_t i = 0; i < grid.bins.numel(); ++i)
        if (grid.bins[i] != 0.0f) magnitudes.push_back(std::abs(grid.bins[i]));

    VoxelGrid out;
    out.m = grid.m;
    out.bins = Tensor(grid.bins.shape());
    if (magnitudes.empty()) return out; // eta undefined; keep the all-zero grid

    std::sort(magnitudes.begin(), magnitudes.end());
    const size_t rank = static_cast<size_t>(std::ceil(0.98 * static_cast<double>(magnitudes.size())));
    const float eta = magnitudes[rank - 1];

    for (std::int64_t i = 0; i < grid.bins.numel(); ++i)
        out.bins[i] = std::clamp(grid.bins[i], -eta, eta) / eta;
    return out;
}

EventSegments to_segments(const VoxelGrid &grid) {
    const int m = grid.m, h = grid.height(), w = grid.width();
    if (grid.bins.extent(0) != m + 1)
        throw std::invalid_argument("to_segments: grid has " + std::to_string(grid.bins.extent(0)) +
                                    " bins, expected M+1 = " + std::to_string(m + 1));
    EventSegments out;
    out.segments = Tensor({m, 2, h, w});
    out.direction = Direction::forward;
    for (int seg = 0; seg < m; ++seg)
        for (int half = 0; half < 2; ++half)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out.segments.at(seg, half, y, x) = grid.bins.at(seg + half, y, x);
    return out;
}

EventStream reverse(const EventStream &stream) {
    EventStream out = stream;
    const double pivot = stream.tau_s + stream.tau_e;
    for (EventRecord &r : out.records) {
        r.timestamp = pivot - r.timestamp;
        r.polarity = -r.polarity;
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const EventRecord &a, const EventRecord &b) { return a.timestamp < b.timestamp; });
    return out;
}

EventStream read_events_text(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event file: " + path);

    EventStream stream;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("event file is empty: " + path);
    {
        std::istringstream header(line);
        if (!(header >> stream.height >> stream.width >> stream.tau_s >> stream.tau_e))
            throw std::runtime_error("event file header must be 'H W tau_s tau_e': " + path);
    }
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        EventRecord r;
        if (!(row >> r.timestamp >> r.x >> r.y >> r.polarity))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'timestamp x y polarity'");
        stream.records.push_back(r);
    }
    stream.validate();
    return stream;
}

void write_events_text(const EventStream &stream, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event file: " + path);
    out.precision(17);
    out << stream.height << " " << stream.width << " " << stream.tau_s << " " << stream.tau_e << "\n";
    for (const EventRecord &r : stream.records)
        out << r.timestamp << " " << r.x << " " << r.y << " " << r.polarity << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
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
        throw std::runtime_error("truncated binary event file: " + path);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_events_binary(const EventStream &stream, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write event file: " + path);
    out.write("EVT1", 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.height));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.width));
    put_le<double>(out, stream.tau_s);
    put_le<double>(out, stream.tau_e);
    put_le<std::uint64_t>(out, stream.records.size());
    for (const EventRecord &r : stream.records) {
        put_le<double>(out, r.timestamp);
        put_le<std::int32_t>(out, r.x);
        put_le<std::int32_t>(out, r.y);
        put_le<std::int32_t>(out, r.polarity);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

EventStream read_events_binary(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open event file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "EVT1", 4) != 0)
        throw std::runtime_error("not an EVT1 event file: " + path);

    EventStream stream;
    stream.height = static_cast<int>(get_le<std::uint32_t>(in, path));
    stream.width = static_cast<int>(get_le<std::uint32_t>(in, path));
    stream.tau_s = get_le<double>(in, path);
    stream.tau_e = get_le<double>(in, path);
    const std::uint64_t count = get_le<std::uint64_t>(in, path);
    stream.records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        EventRecord r;
        r.timestamp = get_le<double>(in, path);
        r.x = get_le<std::int32_t>(in, path);
        r.y = get_le<std::int32_t>(in, path);
        r.polarity = get_le<std::int32_t>(in, path);
        stream.records.push_back(r);
    }
    stream.validate();
    return stream;
}

EventStream read_events(const std::string &path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open event file: " + path);
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, "EVT1", 4) == 0) return read_events_binary(path);
    return read_events_text(path);
}

} // namespace evsr
