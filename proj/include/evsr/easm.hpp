#pragma once

#include <vector>

#include "evsr/events.hpp"
#include "evsr/tensor.hpp"
#include "evsr/weights.hpp"

namespace evsr {

// Event-adapted synthesis backbone: aligns the two input frames to every
// event-segment timestamp through a 3-level pyramid of event-modulated
// deformable sampling, then refines the resulting sequence with bidirectional
// recurrent compensation. Output is the latent sequence the upsamplers sample.
class EasmModel {
  public:
    // Pulls all easm.* tensors (see easm_weight_shapes) out of the store.
    explicit EasmModel(const WeightStore &store);

    struct InitialFeatures {
        Tensor f0, f1;               // (1, 64, H, W) per input frame
        Tensor events_fwd;           // (M, 64, H, W), one map per forward segment
        Tensor events_bwd;           // (M, 64, H, W), reversed-stream segments
    };

    // Shared conv/residual extractors: one for frames, one (2-channel input)
    // applied to every event segment of both directions.
    InitialFeatures extract_initial(const Tensor &frames, const EventSegments &fwd, const EventSegments &bwd,
                                    OpLedger *ledger = nullptr) const;

    // Coarse-to-fine alignment of one frame toward all M segment timestamps.
    // direction picks the warped frame (forward: f0, backward: f1) and must
    // match the event features handed in. Returns M maps of shape (1,64,H,W).
    std::vector<Tensor> align_pyramid(const Tensor &f0, const Tensor &f1, const Tensor &events,
                                      Direction direction, OpLedger *ledger = nullptr) const;

    // Channel-concat + 1x1 conv of the two directions (backward list reversed to
    // physical order), framed by f0/f1: output (M+2, 64, H, W) ordered by time.
    Tensor fuse_directions(const std::vector<Tensor> &fwd, const std::vector<Tensor> &bwd, const Tensor &f0,
                           const Tensor &f1, OpLedger *ledger = nullptr) const;

    // Bidirectional gated refinement: backward sweep produces o^b, forward sweep
    // consumes it. Interior steps fuse the step's event features behind a
    // channel-attention gate; the endpoint steps have no aligned segment and
    // skip that fusion. Returns the forward outputs (M+2, 64, H, W).
    Tensor recurrent_compensate(const Tensor &sequence, const Tensor &events_fwd, const Tensor &events_bwd,
                                OpLedger *ledger = nullptr) const;

    // Full chain on prepared segments; result = fused sequence + compensation.
    Tensor forward_from_segments(const Tensor &frames, const EventSegments &fwd, const EventSegments &bwd,
                                 OpLedger *ledger = nullptr) const;

    // Convenience entry: voxelize/normalize both stream directions at the frame
    // resolution, then run forward_from_segments.
    Tensor forward(const Tensor &frames, const EventStream &stream, int m, OpLedger *ledger = nullptr) const;

    // Event modulation of a motion-vector map at pyramid level 0..2: two convs
    // over cat(mv, event), the output split into a sigmoid gate on mv and an
    // additive correction.
    Tensor modulate(const Tensor &mv, const Tensor &event_feat, int level, OpLedger *ledger = nullptr) const;

  private:
    struct ConvLayer {
        Tensor w, b;
    };
    struct Pyramid {
        std::vector<Tensor> levels; // x1, x1/2, x1/4
    };

    Tensor extract(const Tensor &input, const ConvLayer &conv0, const ConvLayer &res0, const ConvLayer &res1,
                   OpLedger *ledger) const;
    Pyramid build_pyramid(const Tensor &base, const ConvLayer &down1, const ConvLayer &down2,
                          OpLedger *ledger) const;
    Tensor att_fuse(const Tensor &feat, const Tensor &event_feat, bool forward_dir, OpLedger *ledger) const;

    // extractors
    ConvLayer feat_frame_conv0_, feat_frame_res0_, feat_frame_res1_;
    ConvLayer feat_event_conv0_, feat_event_res0_, feat_event_res1_;
    // pyramid downsamplers
    ConvLayer pyr_frame_down1_, pyr_frame_down2_, pyr_event_down1_, pyr_event_down2_;
    // per-level alignment blocks, index 0 = level 1 (full resolution)
    struct AlignLevel {
        ConvLayer mv0, mv1;
        ConvLayer fuse_offset; // levels 1-2 only
        ConvLayer emb0, emb1;
        ConvLayer off0, off1;
        ConvLayer dcn;
        ConvLayer out; // levels 1-2 only
    };
    AlignLevel align_[3];
    ConvLayer fuse_conv_;
    // recurrent compensation, per direction
    struct BrcDirection {
        ConvLayer att_conv, att_fc0, att_fc1;
        ConvLayer cell_z, cell_cand;
    };
    BrcDirection brc_b_, brc_f_;
};

} // namespace evsr
