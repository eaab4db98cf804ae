// Command-line surface for the event-based space-time super-resolution engine.
//
// Subcommands: voxelize, difficulty, superres, plan, metrics, flops. Every
// config-file key has a flag of the same name; precedence is defaults < config
// file (--config or $EVSR_CONFIG) < flags. Errors print one "error: ..." line
// to stderr and exit nonzero.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evsr/csm.hpp"
#include "evsr/easm.hpp"
#include "evsr/events.hpp"
#include "evsr/image_io.hpp"
#include "evsr/livt.hpp"
#include "evsr/metrics.hpp"
#include "evsr/pipeline.hpp"
#include "evsr/train_plan.hpp"

namespace {

struct ConfigCli {
    std::string config_path;
    std::map<std::string, std::string> overrides; // config key -> flag value

    // Registers --config plus one flag per config key on the subcommand.
    void attach(CLI::App *cmd) {
        cmd->add_option("--config", config_path, "config file (default: $EVSR_CONFIG)");
        for (const char *key : {"m", "grid", "pathways", "channels", "threshold", "scale-s", "scale-t", "weights",
                                "seed", "pe-levels"}) {
            cmd->add_option_function<std::string>(
                std::string("--") + key,
                [this, key](const std::string &value) { overrides[key] = value; },
                std::string("config key '") + key + "'");
        }
    }

    evsr::PipelineConfig resolve() const {
        std::string path = config_path;
        if (path.empty()) {
            if (const char *env = std::getenv("EVSR_CONFIG")) path = env;
        }
        evsr::PipelineConfig config = path.empty() ? evsr::PipelineConfig() : evsr::PipelineConfig::from_file(path);
        for (const auto &[key, value] : overrides) config.set(key, value);
        config.validate();
        return config;
    }
};

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "frame_%03d.png", index);
    return buf;
}

void write_ledger(const evsr::OpLedger &ledger, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ledger: " + path);
    for (const auto &[name, count] : ledger.counters()) out << name << " " << count << "\n";
    out << "total " << ledger.total() << "\n";
}

evsr::Tensor load_frame_pair(const std::string &path0, const std::string &path1) {
    evsr::Tensor f0 = evsr::read_image(path0);
    evsr::Tensor f1 = evsr::read_image(path1);
    if (!f0.same_shape(f1))
        throw std::runtime_error("input frames differ in shape: " + f0.shape_string() + " vs " +
                                 f1.shape_string());
    evsr::Tensor frames({2, 3, f0.extent(1), f0.extent(2)});
    for (std::int64_t i = 0; i < f0.numel(); ++i) {
        frames[i] = f0[i];
        frames[f0.numel() + i] = f1[i];
    }
    return frames;
}

std::vector<std::filesystem::path> list_files(const std::string &dir) {
    std::vector<std::filesystem::path> files;
    for (const auto &entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_voxelize(const ConfigCli &cli, const std::string &events_path, const std::string &output) {
    const evsr::PipelineConfig config = cli.resolve();
    const evsr::EventStream stream = evsr::read_events(events_path);
    const evsr::VoxelGrid grid = evsr::normalize(evsr::voxelize(stream, config.m));
    evsr::save_tensor(grid.bins, output);
    std::cout << "voxel grid " << grid.bins.shape_string() << " -> " << output << "\n";
    return 0;
}

int cmd_difficulty(const ConfigCli &cli, const std::string &events_path, double tau,
                   const std::string &diff_prefix, const std::string &mask_prefix) {
    const evsr::PipelineConfig config = cli.resolve();
    const evsr::EventStream stream = evsr::read_events(events_path);
    const evsr::TimestampGrid grid = evsr::TimestampGrid::uniform(config.m);
    const std::vector<int> window = evsr::select_timestamps(grid, tau, config.t_g);
    std::vector<double> stamps;
    for (int idx : window) stamps.push_back(grid.stamps[static_cast<size_t>(idx)]);

    const int out_h = static_cast<int>(std::lround(config.scale_s * stream.height));
    const int out_w = static_cast<int>(std::lround(config.scale_s * stream.width));
    const evsr::DifficultyMap map = evsr::difficulty(stream, stamps, out_h, out_w);
    evsr::write_difficulty_pgm(map, diff_prefix + ".pgm");
    evsr::save_tensor(map.values, diff_prefix + ".tns");

    const evsr::DistributionMask mask = evsr::distribute(map, evsr::ThresholdLadder{config.thresholds});
    evsr::write_mask_pgm(mask, config.pathways, mask_prefix + ".pgm");

    const std::vector<std::int64_t> counts = mask.counts(config.pathways);
    std::cout << "difficulty " << map.values.shape_string() << " window=[" << map.tau_lo << "," << map.tau_hi
              << "] ->  " << diff_prefix << ".pgm/.tns, " << mask_prefix << ".pgm; counts=";
    for (size_t i = 0; i < counts.size(); ++i) std::cout << (i ? "," : "") << counts[i];
    std::cout << "\n";
    return 0;
}

int cmd_superres(const ConfigCli &cli, const std::string &frame0, const std::string &frame1,
                 const std::string &events_path, const std::string &out_dir, int pathway,
                 const std::string &diff_prefix, const std::string &mask_prefix, const std::string &ledger_path) {
    const evsr::PipelineConfig config = cli.resolve();
    const evsr::Tensor frames = load_frame_pair(frame0, frame1);
    const evsr::EventStream stream = evsr::read_events(events_path);
    const evsr::WeightStore store = evsr::resolve_weights(config);
    std::filesystem::create_directories(out_dir);

    evsr::OpLedger ledger;
    std::vector<evsr::Tensor> outputs;
    if (pathway >= 0 || config.pathways == 1) {
        const int index = pathway >= 0 ? pathway : 0;
        outputs = evsr::run_single(config, frames, stream, store, index, &ledger);
        std::cout << "single pathway " << index << ": ";
    } else {
        evsr::RoutedResult result = evsr::run_routed(config, frames, stream, store, &ledger);
        outputs = std::move(result.frames);
        if (!diff_prefix.empty())
            for (size_t k = 0; k < result.difficulty.size(); ++k) {
                evsr::write_difficulty_pgm(result.difficulty[k], diff_prefix + "_" + std::to_string(k) + ".pgm");
                evsr::save_tensor(result.difficulty[k].values, diff_prefix + "_" + std::to_string(k) + ".tns");
            }
        if (!mask_prefix.empty())
            for (size_t k = 0; k < result.masks.size(); ++k)
                evsr::write_mask_pgm(result.masks[k], config.pathways, mask_prefix + "_" + std::to_string(k) + ".pgm");
        std::cout << "routed over " << config.pathways << " pathways, total madds " << std::fixed
                  << std::setprecision(0) << result.budget.total_cost << ": ";
    }
    for (size_t k = 0; k < outputs.size(); ++k)
        evsr::write_image(outputs[k], (std::filesystem::path(out_dir) / frame_name(static_cast<int>(k))).string());
    if (!ledger_path.empty()) write_ledger(ledger, ledger_path);
    std::cout << outputs.size() << " frames " << outputs.front().shape_string() << " -> " << out_dir << "\n";
    return 0;
}

int cmd_plan(int pathways, const std::string &iterations, int t_fix, std::uint64_t seed,
             const std::string &output) {
    std::array<long long, 3> d{};
    if (std::sscanf(iterations.c_str(), "%lld,%lld,%lld", &d[0], &d[1], &d[2]) != 3)
        throw std::runtime_error("--iterations must be three comma-separated counts, got '" + iterations + "'");
    const evsr::TrainPlan plan = evsr::build_plan(pathways, d, t_fix, seed);
    const std::string text = evsr::plan_to_text(plan);
    if (output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(output);
        if (!out) throw std::runtime_error("cannot write plan: " + output);
        out << text;
        std::cout << "plan (" << plan.stages.size() << " stages) -> " << output << "\n";
    }
    return 0;
}

int cmd_metrics(const std::string &pred, const std::string &target) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (std::filesystem::is_directory(pred) && std::filesystem::is_directory(target)) {
        const auto pred_files = list_files(pred);
        const auto target_files = list_files(target);
        if (pred_files.size() != target_files.size())
            throw std::runtime_error("directories hold " + std::to_string(pred_files.size()) + " vs " +
                                     std::to_string(target_files.size()) + " files");
        for (size_t i = 0; i < pred_files.size(); ++i)
            pairs.emplace_back(pred_files[i].string(), target_files[i].string());
    } else {
        pairs.emplace_back(pred, target);
    }
    if (pairs.empty()) throw std::runtime_error("no frames to compare");

    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto &[p, t] : pairs) {
        const double psnr = evsr::psnr_y(evsr::read_image(p), evsr::read_image(t));
        const double ssim = evsr::ssim_y(evsr::read_image(p), evsr::read_image(t));
        psnr_sum += psnr;
        ssim_sum += ssim;
        std::cout << std::filesystem::path(p).filename().string() << " psnr=" << psnr << " ssim=" << ssim << "\n";
    }
    std::cout << "mean psnr=" << psnr_sum / pairs.size() << " ssim=" << ssim_sum / pairs.size() << "\n";
    return 0;
}

int cmd_flops(const ConfigCli &cli, const std::string &frame0, const std::string &frame1,
              const std::string &events_path, const std::string &sweep) {
    const evsr::PipelineConfig base = cli.resolve();
    const evsr::Tensor frames = load_frame_pair(frame0, frame1);
    const evsr::EventStream stream = evsr::read_events(events_path);
    const evsr::WeightStore store = evsr::resolve_weights(base);
    const int h = frames.extent(2), w = frames.extent(3);
    const int out_h = static_cast<int>(std::lround(base.scale_s * h));
    const int out_w = static_cast<int>(std::lround(base.scale_s * w));

    // Shared backbone cost: the ledger is a pure function of shapes, so one
    // forward pass prices every threshold at once.
    evsr::OpLedger easm_ledger;
    const evsr::PreparedSegments segments = evsr::prepare_segments(base, h, w, stream);
    const evsr::EasmModel easm(store);
    const evsr::Tensor latent = easm.forward_from_segments(frames, segments.fwd, segments.bwd, &easm_ledger);
    const double easm_madds = static_cast<double>(easm_ledger.total());

    std::vector<evsr::LivtUpsampler> ups;
    std::vector<double> per_query, encode_cost;
    for (int n = 0; n < base.pathways; ++n) {
        ups.emplace_back(store, "u" + std::to_string(n), base.channels[static_cast<size_t>(n)],
                         evsr::LocalGridSpec{base.t_g, base.h_g, base.w_g}, base.pe_levels);
        per_query.push_back(ups.back().per_query_madds(base.m + 2, h, w));
        encode_cost.push_back(ups.back().encode_madds(base.m + 2, latent.extent(1), h, w));
    }

    // Per-frame difficulty does not depend on the threshold; compute once.
    const evsr::TimestampGrid grid = evsr::TimestampGrid::uniform(base.m);
    std::vector<evsr::DifficultyMap> maps;
    for (int k = 0; k <= base.scale_t; ++k) {
        const double tau = static_cast<double>(k) / base.scale_t;
        std::vector<double> stamps;
        for (int idx : evsr::select_timestamps(grid, tau, base.t_g))
            stamps.push_back(grid.stamps[static_cast<size_t>(idx)]);
        maps.push_back(evsr::difficulty(stream, stamps, out_h, out_w));
    }

    std::cout << "xi";
    for (int n = 0; n < base.pathways; ++n) std::cout << "\tcount" << n;
    std::cout << "\ttotal_madds\n";
    std::istringstream in(sweep);
    std::string item;
    while (std::getline(in, item, ',')) {
        const double xi = std::stod(item);
        evsr::PipelineConfig config = base;
        for (double &threshold : config.thresholds) threshold = xi;
        const evsr::ThresholdLadder ladder{config.thresholds};

        std::vector<std::int64_t> counts(static_cast<size_t>(base.pathways), 0);
        for (const evsr::DifficultyMap &map : maps) {
            const std::vector<std::int64_t> frame_counts =
                evsr::distribute(map, ladder).counts(base.pathways);
            for (int n = 0; n < base.pathways; ++n) counts[static_cast<size_t>(n)] += frame_counts[static_cast<size_t>(n)];
        }
        // Every configured pathway's embedding pass is charged (same rule as the
        // routed budget), so the sweep moves cost only through per-pixel work.
        double total = easm_madds;
        for (int n = 0; n < base.pathways; ++n)
            total += encode_cost[static_cast<size_t>(n)] +
                     static_cast<double>(counts[static_cast<size_t>(n)]) * per_query[static_cast<size_t>(n)];
        std::cout << xi;
        for (int n = 0; n < base.pathways; ++n) std::cout << "\t" << counts[static_cast<size_t>(n)];
        std::cout << "\t" << std::fixed << std::setprecision(0) << total << "\n";
        std::cout.unsetf(std::ios::fixed);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"event-based continuous space-time video super-resolution"};
    app.require_subcommand(1);

    ConfigCli vox_cfg, diff_cfg, sr_cfg, flops_cfg;

    auto *vox = app.add_subcommand("voxelize", "event file -> normalized voxel grid dump");
    std::string vox_events, vox_output = "voxels.tns";
    vox->add_option("--events", vox_events, "event file (text or EVT1)")->required();
    vox->add_option("--output", vox_output, "output tensor file");
    vox_cfg.attach(vox);

    auto *diff = app.add_subcommand("difficulty", "difficulty map and pathway mask images");
    std::string diff_events, diff_prefix = "difficulty", diff_mask_prefix = "mask";
    double diff_tau = 0.5;
    diff->add_option("--events", diff_events, "event file")->required();
    diff->add_option("--tau", diff_tau, "query timestamp in [0,1]");
    diff->add_option("--export-difficulty", diff_prefix, "difficulty output prefix");
    diff->add_option("--export-mask", diff_mask_prefix, "mask output prefix");
    diff_cfg.attach(diff);

    auto *sr = app.add_subcommand("superres", "full pipeline: two frames + events -> (t+1) frames");
    std::string sr_frame0, sr_frame1, sr_events, sr_out = "out", sr_diff, sr_mask, sr_ledger;
    int sr_pathway = -1;
    sr->add_option("--frame0", sr_frame0, "first input frame")->required();
    sr->add_option("--frame1", sr_frame1, "second input frame")->required();
    sr->add_option("--events", sr_events, "event file")->required();
    sr->add_option("--out-dir", sr_out, "output frame directory");
    sr->add_option("--pathway", sr_pathway, "route everything through one pathway index");
    sr->add_option("--export-difficulty", sr_diff, "difficulty output prefix (routed runs)");
    sr->add_option("--export-mask", sr_mask, "mask output prefix (routed runs)");
    sr->add_option("--ledger", sr_ledger, "write multiply-add counters to this file");
    sr_cfg.attach(sr);

    auto *plan = app.add_subcommand("plan", "staged training schedule dry-run export");
    int plan_pathways = 2, plan_tfix = 8;
    std::string plan_iters = "450000,150000,150000", plan_out;
    std::uint64_t plan_seed = 42;
    plan->add_option("--pathways", plan_pathways, "number of pathways N");
    plan->add_option("--iterations", plan_iters, "d1,d2,d3");
    plan->add_option("--t-fix", plan_tfix, "fixed temporal scale");
    plan->add_option("--seed", plan_seed, "seed for recorded scale draws");
    plan->add_option("--output", plan_out, "plan file (default: stdout)");

    auto *met = app.add_subcommand("metrics", "luma PSNR/SSIM between frame files or directories");
    std::string met_pred, met_target;
    met->add_option("--pred", met_pred, "prediction frame or directory")->required();
    met->add_option("--target", met_target, "reference frame or directory")->required();

    auto *flops = app.add_subcommand("flops", "budget table over a threshold sweep");
    std::string fl_frame0, fl_frame1, fl_events, fl_sweep = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    flops->add_option("--frame0", fl_frame0, "first input frame")->required();
    flops->add_option("--frame1", fl_frame1, "second input frame")->required();
    flops->add_option("--events", fl_events, "event file")->required();
    flops->add_option("--sweep", fl_sweep, "comma-separated xi values");
    flops_cfg.attach(flops);

    CLI11_PARSE(app, argc, argv);

    try {
        if (vox->parsed()) return cmd_voxelize(vox_cfg, vox_events, vox_output);
        if (diff->parsed()) return cmd_difficulty(diff_cfg, diff_events, diff_tau, diff_prefix, diff_mask_prefix);
        if (sr->parsed())
            return cmd_superres(sr_cfg, sr_frame0, sr_frame1, sr_events, sr_out, sr_pathway, sr_diff, sr_mask,
                                sr_ledger);
        if (plan->parsed()) return cmd_plan(plan_pathways, plan_iters, plan_tfix, plan_seed, plan_out);
        if (met->parsed()) return cmd_metrics(met_pred, met_target);
        if (flops->parsed()) return cmd_flops(flops_cfg, fl_frame0, fl_frame1, fl_events, fl_sweep);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
