#include "evsr/train_plan.hpp"

#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "evsr/weights.hpp"

namespace evsr {

namespace {

std::vector<std::string> extractor_names() {
    std::vector<std::string> out;
    for (const WeightSpec &spec : easm_weight_shapes()) out.push_back(spec.name);
    return out;
}

std::vector<std::string> upsampler_names(int n) {
    std::vector<std::string> out;
    // Name-only catalog: the per-pathway channel width changes shapes, not names.
    for (const WeightSpec &spec : livt_weight_shapes("u" + std::to_string(n), 16, 3, 10))
        out.push_back(spec.name);
    return out;
}

std::vector<double> sample_scales(std::uint64_t seed, int count, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        out.push_back(lo + (hi - lo) * u);
    }
    return out;
}

} // namespace

TrainPlan build_plan(int n_pathways, std::array<long long, 3> iterations, int t_fix, std::uint64_t seed) {
    if (n_pathways < 1)
        throw std::invalid_argument("build_plan: need at least one pathway, got " + std::to_string(n_pathways));
    for (long long d : iterations)
        if (d < 0) throw std::invalid_argument("build_plan: iteration counts must be >= 0");

    TrainPlan plan;
    plan.n_pathways = n_pathways;
    plan.seed = seed;
    const std::vector<std::string> extractor = extractor_names();

    // Stage 1: N independent derived networks, everything random, fixed scales.
    StagePlan stage1;
    stage1.stage = 1;
    stage1.iterations = iterations[0];
    stage1.t_fix = t_fix;
    stage1.s_fixed = true;
    stage1.s_value = 4.0;
    for (int n = 0; n < n_pathways; ++n) {
        NetworkPlan net;
        net.network = n;
        for (const std::string &name : extractor) net.tensors.push_back({name, true, 0, 0, false});
        for (const std::string &name : upsampler_names(n)) net.tensors.push_back({name, true, 0, 0, false});
        stage1.networks.push_back(std::move(net));
    }
    plan.stages.push_back(std::move(stage1));

    // Stage 2: inherit stage-1 weights per network, vary s uniformly.
    StagePlan stage2;
    stage2.stage = 2;
    stage2.iterations = iterations[1];
    stage2.t_fix = t_fix;
    stage2.s_preview = sample_scales(seed ^ 0x5731ull, 8, stage2.s_lo, stage2.s_hi);
    for (int n = 0; n < n_pathways; ++n) {
        NetworkPlan net;
        net.network = n;
        for (const std::string &name : extractor) net.tensors.push_back({name, false, 1, n, false});
        for (const std::string &name : upsampler_names(n)) net.tensors.push_back({name, false, 1, n, false});
        stage2.networks.push_back(std::move(net));
    }
    plan.stages.push_back(std::move(stage2));

    // Stage 3: freeze the most complex network's extractor; fine-tune the other
    // upsamplers from their stage-2 weights under it. Absent when N = 1.
    if (n_pathways > 1) {
        StagePlan stage3;
        stage3.stage = 3;
        stage3.iterations = iterations[2];
        stage3.t_fix = t_fix;
        stage3.s_preview = sample_scales(seed ^ 0x9d2cull, 8, stage3.s_lo, stage3.s_hi);
        for (int n = 0; n < n_pathways - 1; ++n) {
            NetworkPlan net;
            net.network = n;
            for (const std::string &name : extractor)
                net.tensors.push_back({name, false, 2, n_pathways - 1, true});
            for (const std::string &name : upsampler_names(n)) net.tensors.push_back({name, false, 2, n, false});
            stage3.networks.push_back(std::move(net));
        }
        plan.stages.push_back(std::move(stage3));
        plan.notes.push_back(
            "stage 3 pairs each upsampler (tuned against its own stage-2 extractor) with the frozen "
            "extractor of network " +
            std::to_string(n_pathways - 1) + "; the fine-tune iterations reconcile that mismatch");
    }

    // Final map W*: shared extractor from the most complex network; its
    // upsampler straight from stage 2, the rest from their stage-3 fine-tune.
    for (const std::string &name : extractor) plan.final_map.push_back({name, false, 2, n_pathways - 1, false});
    for (int n = 0; n < n_pathways; ++n) {
        const bool fine_tuned = n < n_pathways - 1;
        for (const std::string &name : upsampler_names(n))
            plan.final_map.push_back({name, false, fine_tuned ? 3 : 2, fine_tuned ? n : n_pathways - 1, false});
    }
    validate_plan(plan);
    return plan;
}

void validate_plan(const TrainPlan &plan) {
    // Tensors that exist at the end of each stage, keyed (stage, network, name).
    std::set<std::tuple<int, int, std::string>> produced;
    for (const StagePlan &stage : plan.stages) {
        for (const NetworkPlan &net : stage.networks) {
            for (const TensorPlan &tensor : net.tensors) {
                if (stage.stage == 1 && !tensor.random)
                    throw std::logic_error("plan: stage 1 tensor " + tensor.name + " is not random-init");
                if (!tensor.random && stage.stage > 1 &&
                    produced.find({tensor.from_stage, tensor.from_network, tensor.name}) == produced.end())
                    throw std::logic_error("plan: " + tensor.name + " inherits from stage " +
                                           std::to_string(tensor.from_stage) + " network " +
                                           std::to_string(tensor.from_network) + " which never produced it");
                if (stage.stage == 3) {
                    const bool is_extractor = tensor.name.rfind("easm.", 0) == 0;
                    if (is_extractor != tensor.frozen)
                        throw std::logic_error("plan: stage 3 must freeze exactly the extractor; " + tensor.name +
                                               (tensor.frozen ? " is frozen" : " is updatable"));
                }
                produced.insert({stage.stage, net.network, tensor.name});
            }
        }
    }
    for (const TensorPlan &tensor : plan.final_map)
        if (produced.find({tensor.from_stage, tensor.from_network, tensor.name}) == produced.end())
            throw std::logic_error("plan: final map entry " + tensor.name + " references stage " +
                                   std::to_string(tensor.from_stage) + " network " +
                                   std::to_string(tensor.from_network) + " which never produced it");
}

std::string plan_to_text(const TrainPlan &plan) {
    std::ostringstream out;
    out << "train-plan pathways=" << plan.n_pathways << " seed=" << plan.seed << "\n";
    for (const StagePlan &stage : plan.stages) {
        out << "stage " << stage.stage << " iterations=" << stage.iterations << " t=fix:" << stage.t_fix;
        if (stage.s_fixed) {
            out << " s=fix:" << stage.s_value << "\n";
        } else {
            out << " s=uniform:" << stage.s_lo << ".." << stage.s_hi << " draws=";
            for (size_t i = 0; i < stage.s_preview.size(); ++i)
                out << (i ? "," : "") << stage.s_preview[i];
            out << "\n";
        }
        for (const NetworkPlan &net : stage.networks) {
            out << "  network " << net.network << "\n";
            for (const TensorPlan &tensor : net.tensors) {
                out << "    " << tensor.name << " <- ";
                if (tensor.random)
                    out << "random";
                else
                    out << "stage" << tensor.from_stage << ".network" << tensor.from_network;
                if (tensor.frozen) out << " [frozen]";
                out << "\n";
            }
        }
    }
    out << "final\n";
    for (const TensorPlan &tensor : plan.final_map)
        out << "  " << tensor.name << " <- stage" << tensor.from_stage << ".network" << tensor.from_network
            << "\n";
    for (const std::string &note : plan.notes) out << "note: " << note << "\n";
    return out.str();
}

} // namespace evsr
