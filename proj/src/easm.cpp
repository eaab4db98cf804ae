#include "evsr/easm.hpp"

#include <cmath>
#include <stdexcept>

#include "evsr/kernels.hpp"

namespace evsr {

namespace {

Tensor slice_batch(const Tensor &t, int index) {
    Tensor out({1, t.extent(1), t.extent(2), t.extent(3)});
    const std::int64_t stride = out.numel();
    for (std::int64_t i = 0; i < stride; ++i) out[i] = t[static_cast<std::int64_t>(index) * stride + i];
    return out;
}

Tensor concat_channels(const Tensor &a, const Tensor &b) {
    if (a.extent(0) != b.extent(0) || a.extent(2) != b.extent(2) || a.extent(3) != b.extent(3))
        throw std::invalid_argument("concat: shapes " + a.shape_string() + " and " + b.shape_string() +
                                    " differ outside the channel axis");
    Tensor out({a.extent(0), a.extent(1) + b.extent(1), a.extent(2), a.extent(3)});
    for (int n = 0; n < a.extent(0); ++n) {
        for (int c = 0; c < a.extent(1); ++c)
            for (int y = 0; y < a.extent(2); ++y)
                for (int x = 0; x < a.extent(3); ++x) out.at(n, c, y, x) = a.at(n, c, y, x);
        for (int c = 0; c < b.extent(1); ++c)
            for (int y = 0; y < b.extent(2); ++y)
                for (int x = 0; x < b.extent(3); ++x) out.at(n, a.extent(1) + c, y, x) = b.at(n, c, y, x);
    }
    return out;
}

Tensor add(const Tensor &a, const Tensor &b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("add: shapes " + a.shape_string() + " and " + b.shape_string() + " differ");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sigmoid(const Tensor &t, OpLedger *ledger) {
    Tensor out(t.shape());
    for (std::int64_t i = 0; i < t.numel(); ++i) out[i] = sigmoid_scalar(t[i]);
    if (ledger) ledger->add("sigmoid", static_cast<std::uint64_t>(t.numel()));
    return out;
}

Tensor tanh_map(const Tensor &t, OpLedger *ledger) {
    Tensor out(t.shape());
    for (std::int64_t i = 0; i < t.numel(); ++i) out[i] = std::tanh(t[i]);
    if (ledger) ledger->add("tanh", static_cast<std::uint64_t>(t.numel()));
    return out;
}

// Bilinear upscale of a (1, C, h, w) map to the level extents above it.
Tensor upscale_to(const Tensor &t, int out_h, int out_w, OpLedger *ledger) {
    Tensor flat({t.extent(1), t.extent(2), t.extent(3)}, std::vector<float>(t.data(), t.data() + t.numel()));
    Tensor scaled = resize_bilinear(flat, out_h, out_w, ledger);
    return Tensor({1, t.extent(1), out_h, out_w},
                  std::vector<float>(scaled.data(), scaled.data() + scaled.numel()));
}

} // namespace

EasmModel::EasmModel(const WeightStore &store) {
    auto conv = [&store](const std::string &name) {
        return ConvLayer{store.get(name + ".weight"), store.get(name + ".bias")};
    };
    feat_frame_conv0_ = conv("easm.feat.frame.conv0");
    feat_frame_res0_ = conv("easm.feat.frame.res0.conv0");
    feat_frame_res1_ = conv("easm.feat.frame.res0.conv1");
    feat_event_conv0_ = conv("easm.feat.event.conv0");
    feat_event_res0_ = conv("easm.feat.event.res0.conv0");
    feat_event_res1_ = conv("easm.feat.event.res0.conv1");
    pyr_frame_down1_ = conv("easm.pyr.frame.down1");
    pyr_frame_down2_ = conv("easm.pyr.frame.down2");
    pyr_event_down1_ = conv("easm.pyr.event.down1");
    pyr_event_down2_ = conv("easm.pyr.event.down2");
    for (int level = 1; level <= 3; ++level) {
        const std::string p = "easm.align.l" + std::to_string(level);
        AlignLevel &al = align_[level - 1];
        al.mv0 = conv(p + ".mv.conv0");
        al.mv1 = conv(p + ".mv.conv1");
        if (level < 3) al.fuse_offset = conv(p + ".fuse_offset");
        al.emb0 = conv(p + ".emb.conv0");
        al.emb1 = conv(p + ".emb.conv1");
        al.off0 = conv(p + ".offset.conv0");
        al.off1 = conv(p + ".offset.conv1");
        al.dcn = conv(p + ".dcn");
        if (level < 3) al.out = conv(p + ".out");
    }
    fuse_conv_ = conv("easm.fuse.conv");
    for (BrcDirection *dir : {&brc_b_, &brc_f_}) {
        const std::string p = dir == &brc_b_ ? "easm.brc.b" : "easm.brc.f";
        dir->att_conv = conv(p + ".att.conv");
        dir->att_fc0 = conv(p + ".att.fc0");
        dir->att_fc1 = conv(p + ".att.fc1");
        dir->cell_z = conv(p + ".cell.z");
        dir->cell_cand = conv(p + ".cell.cand");
    }
}

Tensor EasmModel::extract(const Tensor &input, const ConvLayer &conv0, const ConvLayer &res0, const ConvLayer &res1,
                          OpLedger *ledger) const {
    Tensor feat = leaky_relu(conv2d(input, conv0.w, conv0.b, 1, 1, ledger), 0.1f, ledger);
    Tensor res = conv2d(leaky_relu(conv2d(feat, res0.w, res0.b, 1, 1, ledger), 0.1f, ledger), res1.w, res1.b, 1, 1,
                        ledger);
    return add(feat, res);
}

EasmModel::InitialFeatures EasmModel::extract_initial(const Tensor &frames, const EventSegments &fwd,
                                                      const EventSegments &bwd, OpLedger *ledger) const {
    if (frames.rank() != 4 || frames.extent(0) != 2 || frames.extent(1) != 3)
        throw std::invalid_argument("extract_initial: frames must be (2,3,H,W), got " + frames.shape_string());
    if (fwd.direction != Direction::forward || bwd.direction != Direction::backward)
        throw std::invalid_argument("extract_initial: segment directions are swapped");
    if (!fwd.segments.same_shape(bwd.segments))
        throw std::invalid_argument("extract_initial: segment shapes differ: " + fwd.segments.shape_string() +
                                    " vs " + bwd.segments.shape_string());
    if (fwd.segments.extent(2) != frames.extent(2) || fwd.segments.extent(3) != frames.extent(3))
        throw std::invalid_argument("extract_initial: segments " + fwd.segments.shape_string() +
                                    " do not match frames " + frames.shape_string());

    InitialFeatures out;
    out.f0 = extract(slice_batch(frames, 0), feat_frame_conv0_, feat_frame_res0_, feat_frame_res1_, ledger);
    out.f1 = extract(slice_batch(frames, 1), feat_frame_conv0_, feat_frame_res0_, feat_frame_res1_, ledger);
    out.events_fwd = extract(fwd.segments, feat_event_conv0_, feat_event_res0_, feat_event_res1_, ledger);
    out.events_bwd = extract(bwd.segments, feat_event_conv0_, feat_event_res0_, feat_event_res1_, ledger);
    return out;
}

EasmModel::Pyramid EasmModel::build_pyramid(const Tensor &base, const ConvLayer &down1, const ConvLayer &down2,
                                            OpLedger *ledger) const {
    Pyramid pyr;
    pyr.levels.push_back(base);
    pyr.levels.push_back(leaky_relu(conv2d(pyr.levels[0], down1.w, down1.b, 2, 1, ledger), 0.1f, ledger));
    pyr.levels.push_back(leaky_relu(conv2d(pyr.levels[1], down2.w, down2.b, 2, 1, ledger), 0.1f, ledger));
    return pyr;
}

Tensor EasmModel::modulate(const Tensor &mv, const Tensor &event_feat, int level, OpLedger *ledger) const {
    const AlignLevel &al = align_[level];
    Tensor hidden = leaky_relu(conv2d(concat_channels(mv, event_feat), al.emb0.w, al.emb0.b, 1, 1, ledger), 0.1f,
                               ledger);
    Tensor both = conv2d(hidden, al.emb1.w, al.emb1.b, 1, 1, ledger);
    // First half gates the motion vector, second half adds a correction.
    const int c = mv.extent(1), h = mv.extent(2), w = mv.extent(3);
    Tensor out({1, c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(0, ch, y, x) =
                    sigmoid_scalar(both.at(0, ch, y, x)) * mv.at(0, ch, y, x) + both.at(0, c + ch, y, x);
    if (ledger) ledger->add("sigmoid", static_cast<std::uint64_t>(out.numel()));
    return out;
}

std::vector<Tensor> EasmModel::align_pyramid(const Tensor &f0, const Tensor &f1, const Tensor &events,
                                             Direction direction, OpLedger *ledger) const {
    const int m = events.extent(0);
    const Tensor &src = direction == Direction::forward ? f0 : f1;

    Pyramid src_pyr = build_pyramid(src, pyr_frame_down1_, pyr_frame_down2_, ledger);
    Pyramid f0_pyr = direction == Direction::forward ? src_pyr : build_pyramid(f0, pyr_frame_down1_, pyr_frame_down2_, ledger);
    Pyramid f1_pyr = direction == Direction::backward ? src_pyr : build_pyramid(f1, pyr_frame_down1_, pyr_frame_down2_, ledger);
    Pyramid ev_pyr = build_pyramid(events, pyr_event_down1_, pyr_event_down2_, ledger);

    // The motion-vector base depends only on the frame pair: compute once per
    // level; the event modulation supplies per-segment specificity.
    Tensor mv_base[3];
    for (int level = 0; level < 3; ++level) {
        const AlignLevel &al = align_[level];
        Tensor cat = concat_channels(f0_pyr.levels[static_cast<size_t>(level)],
                                     f1_pyr.levels[static_cast<size_t>(level)]);
        mv_base[level] =
            conv2d(leaky_relu(conv2d(cat, al.mv0.w, al.mv0.b, 1, 1, ledger), 0.1f, ledger), al.mv1.w, al.mv1.b, 1,
                   1, ledger);
    }

    std::vector<Tensor> aligned;
    aligned.reserve(static_cast<size_t>(m));
    for (int seg = 0; seg < m; ++seg) {
        Tensor coarser_offsets, coarser_aligned;
        for (int level = 2; level >= 0; --level) {
            const AlignLevel &al = align_[level];
            const Tensor &feat = src_pyr.levels[static_cast<size_t>(level)];
            const int h = feat.extent(2), w = feat.extent(3);
            Tensor ev_level = slice_batch(ev_pyr.levels[static_cast<size_t>(level)], seg);

            Tensor base = mv_base[level];
            if (level < 2) {
                // Coarse-to-fine: fold in the upsampled offsets (x2 scale,
                // values doubled to stay in finer-level pixel units).
                Tensor up = upscale_to(coarser_offsets, h, w, ledger);
                for (std::int64_t i = 0; i < up.numel(); ++i) up[i] *= 2.0f;
                base = leaky_relu(conv2d(concat_channels(base, up), al.fuse_offset.w, al.fuse_offset.b, 1, 1,
                                         ledger),
                                  0.1f, ledger);
            }
            Tensor modulated = modulate(base, ev_level, level, ledger);
            Tensor offsets = conv2d(leaky_relu(conv2d(concat_channels(modulated, base), al.off0.w, al.off0.b, 1, 1,
                                                      ledger),
                                               0.1f, ledger),
                                    al.off1.w, al.off1.b, 1, 1, ledger);
            Tensor warped = deform_conv2d(feat, al.dcn.w, al.dcn.b, offsets, ledger);
            if (level < 2) {
                Tensor up = upscale_to(coarser_aligned, h, w, ledger);
                warped = conv2d(concat_channels(warped, up), al.out.w, al.out.b, 1, 1, ledger);
            }
            coarser_aligned = leaky_relu(warped, 0.1f, ledger);
            coarser_offsets = std::move(offsets);
        }
        aligned.push_back(coarser_aligned);
    }
    return aligned;
}

Tensor EasmModel::fuse_directions(const std::vector<Tensor> &fwd, const std::vector<Tensor> &bwd, const Tensor &f0,
                                  const Tensor &f1, OpLedger *ledger) const {
    if (fwd.size() != bwd.size())
        throw std::invalid_argument("fuse_directions: direction lists differ in length: " +
                                    std::to_string(fwd.size()) + " vs " + std::to_string(bwd.size()));
    const int m = static_cast<int>(fwd.size());
    const int c = f0.extent(1), h = f0.extent(2), w = f0.extent(3);

    Tensor sequence({m + 2, c, h, w});
    auto paste = [&sequence, c, h, w](int index, const Tensor &map) {
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) sequence.at(index, ch, y, x) = map.at(0, ch, y, x);
    };
    paste(0, f0);
    paste(m + 1, f1);
    for (int seg = 0; seg < m; ++seg) {
        // The backward branch aligned F_1 to reversed-stream segments, so its
        // list runs in reversed time: physical segment `seg` is bwd[m-1-seg].
        Tensor cat = concat_channels(fwd[static_cast<size_t>(seg)], bwd[static_cast<size_t>(m - 1 - seg)]);
        paste(seg + 1, conv2d(cat, fuse_conv_.w, fuse_conv_.b, 1, 0, ledger));
    }
    return sequence;
}

Tensor EasmModel::att_fuse(const Tensor &feat, const Tensor &event_feat, bool forward_dir, OpLedger *ledger) const {
    const BrcDirection &dir = forward_dir ? brc_f_ : brc_b_;
    Tensor fused = leaky_relu(conv2d(concat_channels(feat, event_feat), dir.att_conv.w, dir.att_conv.b, 1, 1,
                                     ledger),
                              0.1f, ledger);
    return channel_attention(fused, dir.att_fc0.w, dir.att_fc0.b, dir.att_fc1.w, dir.att_fc1.b, ledger);
}

Tensor EasmModel::recurrent_compensate(const Tensor &sequence, const Tensor &events_fwd, const Tensor &events_bwd,
                                       OpLedger *ledger) const {
    const int len = sequence.extent(0), c = sequence.extent(1), h = sequence.extent(2), w = sequence.extent(3);
    const int m = len - 2;
    if (events_fwd.extent(0) != m || events_bwd.extent(0) != m)
        throw std::invalid_argument("recurrent_compensate: sequence length " + std::to_string(len) +
                                    " needs " + std::to_string(m) + " event maps per direction, got " +
                                    std::to_string(events_fwd.extent(0)) + "/" +
                                    std::to_string(events_bwd.extent(0)));

    auto step = [&](const BrcDirection &dir, const Tensor &input, Tensor &hidden) {
        Tensor cat = concat_channels(input, hidden);
        Tensor z = sigmoid(conv2d(cat, dir.cell_z.w, dir.cell_z.b, 1, 1, ledger), ledger);
        Tensor cand = tanh_map(conv2d(cat, dir.cell_cand.w, dir.cell_cand.b, 1, 1, ledger), ledger);
        Tensor next(hidden.shape());
        for (std::int64_t i = 0; i < next.numel(); ++i)
            next[i] = (1.0f - z[i]) * hidden[i] + z[i] * cand[i];
        hidden = std::move(next);
    };

    // Backward sweep: from the last timestamp down, remembering each output.
    std::vector<Tensor> o_b(static_cast<size_t>(len));
    Tensor hidden({1, c, h, w});
    for (int i = len - 1; i >= 0; --i) {
        Tensor x = slice_batch(sequence, i);
        if (i > 0 && i < len - 1) {
            // Interior step: the segment between this stamp and the sweep's
            // origin side, taken from the reversed-order backward features.
            Tensor ev = slice_batch(events_bwd, m - i);
            x = att_fuse(x, ev, false, ledger);
        }
        step(brc_b_, x, hidden);
        o_b[static_cast<size_t>(i)] = hidden;
    }

    // Forward sweep consumes the backward outputs alongside each input.
    Tensor out({len, c, h, w});
    hidden = Tensor({1, c, h, w});
    for (int i = 0; i < len; ++i) {
        Tensor x = slice_batch(sequence, i);
        if (i > 0 && i < len - 1) x = att_fuse(x, slice_batch(events_fwd, i - 1), true, ledger);
        step(brc_f_, concat_channels(x, o_b[static_cast<size_t>(i)]), hidden);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) out.at(i, ch, y, xx) = hidden.at(0, ch, y, xx);
    }
    return out;
}

Tensor EasmModel::forward_from_segments(const Tensor &frames, const EventSegments &fwd, const EventSegments &bwd,
                                        OpLedger *ledger) const {
    InitialFeatures init = extract_initial(frames, fwd, bwd, ledger);
    std::vector<Tensor> aligned_f = align_pyramid(init.f0, init.f1, init.events_fwd, Direction::forward, ledger);
    std::vector<Tensor> aligned_b = align_pyramid(init.f0, init.f1, init.events_bwd, Direction::backward, ledger);
    Tensor fused = fuse_directions(aligned_f, aligned_b, init.f0, init.f1, ledger);
    Tensor compensation = recurrent_compensate(fused, init.events_fwd, init.events_bwd, ledger);
    return add(fused, compensation);
}

Tensor EasmModel::forward(const Tensor &frames, const EventStream &stream, int m, OpLedger *ledger) const {
    if (frames.extent(2) != stream.height || frames.extent(3) != stream.width)
        throw std::invalid_argument("easm: frames " + frames.shape_string() + " do not match stream resolution " +
                                    std::to_string(stream.height) + "x" + std::to_string(stream.width));
    EventSegments fwd = to_segments(normalize(voxelize(stream, m)));
    EventSegments bwd = to_segments(normalize(voxelize(reverse(stream), m)));
    bwd.direction = Direction::backward;
    return forward_from_segments(frames, fwd, bwd, ledger);
}

} // namespace evsr
