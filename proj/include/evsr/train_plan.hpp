#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace evsr {

// Where a tensor's initial value comes from at the start of a stage.
struct TensorPlan {
    std::string name;       // e.g. "easm.fuse.conv.weight" or "u0.mlp.4.bias"
    bool random = false;    // fresh init (stage 1 only)
    int from_stage = 0;     // when inherited: source stage index
    int from_network = 0;   // when inherited: source derived-network index
    bool frozen = false;    // excluded from the stage's updatable set
};

struct NetworkPlan {
    int network = 0; // derived-network index n
    std::vector<TensorPlan> tensors;
};

struct StagePlan {
    int stage = 0;
    long long iterations = 0;
    int t_fix = 0;                    // temporal scale, fixed in every stage
    bool s_fixed = false;             // stage 1 trains at one spatial scale
    double s_value = 4.0;             // the fixed scale
    double s_lo = 1.0, s_hi = 4.0;    // uniform range otherwise
    std::vector<double> s_preview;    // first draws of the seeded sampler, for reproducibility
    std::vector<NetworkPlan> networks;
};

// The full staged schedule plus the final weight map for the merged network.
struct TrainPlan {
    int n_pathways = 1;
    std::uint64_t seed = 0;
    std::vector<StagePlan> stages;       // stage 3 is absent when N = 1
    std::vector<TensorPlan> final_map;   // W*: every tensor of the merged network
    std::vector<std::string> notes;      // caveats surfaced by the dry run
};

// Build the three-stage schedule for N pathways: stage 1 trains N derived
// networks from scratch at fixed scales; stage 2 inherits them and varies s
// uniformly; the most complex network's extractor becomes the shared target,
// and stage 3 fine-tunes the remaining upsamplers under that frozen extractor.
// Pure function of its arguments; `seed` only determines the recorded s draws.
TrainPlan build_plan(int n_pathways, std::array<long long, 3> iterations, int t_fix, std::uint64_t seed);

// Structural checks: every inherited reference resolves to a prior-stage tensor,
// no frozen tensor is updatable, stage-3 updatable set is exactly u_0..u_{N-2}.
// Throws std::logic_error on violation.
void validate_plan(const TrainPlan &plan);

// Human-readable export consumed by the CLI `plan` subcommand.
std::string plan_to_text(const TrainPlan &plan);

} // namespace evsr
