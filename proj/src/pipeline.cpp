#include "evsr/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evsr/easm.hpp"
#include "evsr/kernels.hpp"
#include "evsr/livt.hpp"

namespace evsr {

void PipelineConfig::validate() const {
    if (m < 1) throw std::invalid_argument("config: m must be >= 1");
    if (t_g < 1 || t_g % 2 == 0 || h_g < 1 || h_g % 2 == 0 || w_g < 1 || w_g % 2 == 0)
        throw std::invalid_argument("config: grid extents must be odd and positive");
    if (t_g > m + 2) throw std::invalid_argument("config: grid t_g exceeds the m+2 timestamps");
    if (pathways < 1) throw std::invalid_argument("config: pathways must be >= 1");
    if (static_cast<int>(channels.size()) != pathways)
        throw std::invalid_argument("config: need one channel width per pathway, got " +
                                    std::to_string(channels.size()) + " for " + std::to_string(pathways));
    if (static_cast<int>(thresholds.size()) != pathways - 1)
        throw std::invalid_argument("config: need pathways-1 thresholds, got " +
                                    std::to_string(thresholds.size()) + " for " + std::to_string(pathways));
    ThresholdLadder{thresholds}.validate();
    for (int c : channels)
        if (c < 1) throw std::invalid_argument("config: channel widths must be positive");
    if (scale_s <= 0.0) throw std::invalid_argument("config: scale-s must be positive");
    if (scale_t < 1) throw std::invalid_argument("config: scale-t must be >= 1");
    if (pe_levels < 1) throw std::invalid_argument("config: pe-levels must be >= 1");
}

namespace {

std::vector<std::string> split_list(const std::string &value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

} // namespace

void PipelineConfig::set(const std::string &key, const std::string &value) {
    try {
        if (key == "m") {
            m = std::stoi(value);
        } else if (key == "grid") {
            // "3x3x3" -> t_g, h_g, w_g
            std::istringstream in(value);
            char sep1, sep2;
            if (!(in >> t_g >> sep1 >> h_g >> sep2 >> w_g) || sep1 != 'x' || sep2 != 'x')
                throw std::invalid_argument("config: grid must look like 3x3x3, got '" + value + "'");
        } else if (key == "pathways") {
            pathways = std::stoi(value);
        } else if (key == "channels") {
            channels.clear();
            for (const std::string &item : split_list(value)) channels.push_back(std::stoi(item));
        } else if (key == "threshold" || key == "thresholds") {
            thresholds.clear();
            for (const std::string &item : split_list(value)) thresholds.push_back(std::stod(item));
        } else if (key == "scale-s") {
            scale_s = std::stod(value);
        } else if (key == "scale-t") {
            scale_t = std::stoi(value);
        } else if (key == "weights") {
            weights_path = value;
        } else if (key == "seed") {
            seed = std::stoull(value);
        } else if (key == "pe-levels") {
            pe_levels = std::stoi(value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    } catch (const std::invalid_argument &) {
        throw;
    } catch (const std::exception &) {
        throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
    }
}

PipelineConfig PipelineConfig::from_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    PipelineConfig config;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

WeightStore resolve_weights(const PipelineConfig &config) {
    config.validate();
    if (!config.weights_path.empty()) {
        WeightStore store = WeightStore::load(config.weights_path);
        for (const WeightSpec &spec : easm_weight_shapes())
            if (!store.contains(spec.name))
                throw std::runtime_error("weight file lacks tensor '" + spec.name + "'");
        for (int n = 0; n < config.pathways; ++n)
            for (const WeightSpec &spec : livt_weight_shapes("u" + std::to_string(n),
                                                             config.channels[static_cast<size_t>(n)], config.t_g,
                                                             config.pe_levels))
                if (!store.contains(spec.name))
                    throw std::runtime_error("weight file lacks tensor '" + spec.name + "'");
        return store;
    }
    WeightStore store;
    seeded_fill(store, easm_weight_shapes(), config.seed);
    for (int n = 0; n < config.pathways; ++n)
        seeded_fill(store,
                    livt_weight_shapes("u" + std::to_string(n), config.channels[static_cast<size_t>(n)],
                                       config.t_g, config.pe_levels),
                    config.seed);
    return store;
}

PreparedSegments prepare_segments(const PipelineConfig &config, int frame_h, int frame_w,
                                  const EventStream &stream, OpLedger *ledger) {
    auto build = [&](const EventStream &s) {
        VoxelGrid grid = voxelize(s, config.m);
        if (grid.height() != frame_h || grid.width() != frame_w)
            grid.bins = resize_bicubic(grid.bins, frame_h, frame_w, ledger);
        return to_segments(normalize(grid));
    };
    PreparedSegments out;
    out.fwd = build(stream);
    out.bwd = build(reverse(stream));
    out.bwd.direction = Direction::backward;
    return out;
}

namespace {

struct Synthesis {
    Tensor latent; // EASM output (M+2, 64, H, W)
    TimestampGrid grid;
    int out_h = 0, out_w = 0;
    double easm_madds = 0.0;
};

Synthesis synthesize(const PipelineConfig &config, const Tensor &frames, const EventStream &stream,
                     const WeightStore &store, OpLedger *ledger) {
    config.validate();
    if (frames.rank() != 4 || frames.extent(0) != 2 || frames.extent(1) != 3)
        throw std::invalid_argument("pipeline: frames must be (2,3,H,W), got " + frames.shape_string());

    const int h = frames.extent(2), w = frames.extent(3);
    PreparedSegments segments = prepare_segments(config, h, w, stream, ledger);

    OpLedger easm_ledger;
    EasmModel easm(store);
    Synthesis out;
    out.latent = easm.forward_from_segments(frames, segments.fwd, segments.bwd, &easm_ledger);
    out.grid = TimestampGrid::uniform(config.m);
    out.out_h = static_cast<int>(std::lround(config.scale_s * h));
    out.out_w = static_cast<int>(std::lround(config.scale_s * w));
    out.easm_madds = static_cast<double>(easm_ledger.total());
    if (ledger) ledger->merge(easm_ledger);
    return out;
}

LivtUpsampler make_upsampler(const PipelineConfig &config, const WeightStore &store, int index) {
    return LivtUpsampler(store, "u" + std::to_string(index), config.channels[static_cast<size_t>(index)],
                         LocalGridSpec{config.t_g, config.h_g, config.w_g}, config.pe_levels);
}

} // namespace

std::vector<Tensor> run_single(const PipelineConfig &config, const Tensor &frames, const EventStream &stream,
                               const WeightStore &store, int pathway_index, OpLedger *ledger) {
    if (pathway_index < 0 || pathway_index >= config.pathways)
        throw std::invalid_argument("pipeline: pathway index " + std::to_string(pathway_index) +
                                    " outside 0.." + std::to_string(config.pathways - 1));
    Synthesis syn = synthesize(config, frames, stream, store, ledger);
    LivtUpsampler up = make_upsampler(config, store, pathway_index);
    LivtEmbeddings emb = up.encode(syn.latent, ledger);

    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(config.scale_t) + 1);
    for (int k = 0; k <= config.scale_t; ++k) {
        const double tau = static_cast<double>(k) / config.scale_t;
        out.push_back(up.render_frame(emb, syn.grid, tau, syn.out_h, syn.out_w, ledger));
    }
    return out;
}

RoutedResult run_routed(const PipelineConfig &config, const Tensor &frames, const EventStream &stream,
                        const WeightStore &store, OpLedger *ledger) {
    Synthesis syn = synthesize(config, frames, stream, store, ledger);

    std::vector<LivtUpsampler> ups;
    ups.reserve(static_cast<size_t>(config.pathways));
    for (int n = 0; n < config.pathways; ++n) ups.push_back(make_upsampler(config, store, n));
    const ThresholdLadder ladder{config.thresholds};
    const int t_len = syn.latent.extent(0);

    RoutedResult result;
    std::vector<std::int64_t> counts(static_cast<size_t>(config.pathways), 0);

    // Difficulty/mask first, so embeddings are computed only for used pathways.
    for (int k = 0; k <= config.scale_t; ++k) {
        const double tau = static_cast<double>(k) / config.scale_t;
        const std::vector<int> window = select_timestamps(syn.grid, tau, config.t_g);
        std::vector<double> stamps;
        for (int idx : window) stamps.push_back(syn.grid.stamps[static_cast<size_t>(idx)]);
        result.difficulty.push_back(difficulty(stream, stamps, syn.out_h, syn.out_w));
        result.masks.push_back(distribute(result.difficulty.back(), ladder));
        const std::vector<std::int64_t> frame_counts = result.masks.back().counts(config.pathways);
        for (int n = 0; n < config.pathways; ++n) counts[static_cast<size_t>(n)] += frame_counts[static_cast<size_t>(n)];
    }

    std::vector<LivtEmbeddings> embs(static_cast<size_t>(config.pathways));
    for (int n = 0; n < config.pathways; ++n) {
        if (counts[static_cast<size_t>(n)] == 0) continue;
        OpLedger enc_ledger;
        embs[static_cast<size_t>(n)] = ups[static_cast<size_t>(n)].encode(syn.latent, &enc_ledger);
        if (ledger) ledger->merge(enc_ledger);
    }

    for (int k = 0; k <= config.scale_t; ++k) {
        const double tau = static_cast<double>(k) / config.scale_t;
        const DistributionMask &mask = result.masks[static_cast<size_t>(k)];
        Tensor frame({3, syn.out_h, syn.out_w});
        for (int i = 0; i < syn.out_h; ++i)
            for (int j = 0; j < syn.out_w; ++j) {
                const int n = mask.at(i, j);
                const std::array<float, 3> rgb = ups[static_cast<size_t>(n)].decode_query(
                    embs[static_cast<size_t>(n)], syn.grid, tau, (j + 0.5) / syn.out_w, (i + 0.5) / syn.out_h,
                    ledger);
                for (int c = 0; c < 3; ++c) frame.at(c, i, j) = rgb[static_cast<size_t>(c)];
            }
        result.frames.push_back(std::move(frame));
    }

    // Budget: counts over all frames against calibrated per-query costs. The
    // shared term charges every configured pathway's embedding pass (even when
    // the lazy encode above skipped an unused one) so a threshold sweep moves
    // cost only through the per-pixel column and stays monotone.
    std::vector<double> per_query;
    double encode_madds = 0.0;
    for (int n = 0; n < config.pathways; ++n) {
        per_query.push_back(ups[static_cast<size_t>(n)].per_query_madds(t_len, frames.extent(2), frames.extent(3)));
        encode_madds += ups[static_cast<size_t>(n)].encode_madds(t_len, syn.latent.extent(1), frames.extent(2),
                                                                 frames.extent(3));
    }
    DistributionMask all;
    all.height = syn.out_h * (config.scale_t + 1);
    all.width = syn.out_w;
    for (const DistributionMask &mask : result.masks)
        all.pathway.insert(all.pathway.end(), mask.pathway.begin(), mask.pathway.end());
    result.budget = budget_report(all, per_query, syn.easm_madds + encode_madds);
    return result;
}

} // namespace evsr
