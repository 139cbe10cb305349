#include "sstd/anchors.hpp"

#include <algorithm>
#include <numeric>

namespace sstd {

AnchorSet generate_default_boxes(std::span<const LayerAnchorSpec> specs, int image_size) {
    require(!specs.empty(), "generate_default_boxes: no layer specs");
    require(image_size >= 1, "generate_default_boxes: image_size must be >= 1");

    AnchorSet set;
    for (const LayerAnchorSpec& spec : specs) {
        require(spec.stride >= 1, "anchor spec '" + spec.layer_name + "': stride must be >= 1");
        require(image_size % spec.stride == 0,
                "anchor spec '" + spec.layer_name + "': image size " + std::to_string(image_size) +
                    " not divisible by stride " + std::to_string(spec.stride));
        require(!spec.scales.empty(), "anchor spec '" + spec.layer_name + "': no scales");
        for (std::size_t i = 1; i < spec.scales.size(); ++i)
            require(spec.scales[i] > spec.scales[i - 1],
                    "anchor spec '" + spec.layer_name + "': scales must be strictly increasing");
        for (double r : spec.aspect_ratios)
            require(r > 0, "anchor spec '" + spec.layer_name + "': aspect ratios must be positive");

        int per_loc = 0;
        for (double r : spec.aspect_ratios) per_loc += (r == 1.0) ? 1 : 2;
        per_loc *= static_cast<int>(spec.scales.size());
        if (set.per_location == 0)
            set.per_location = per_loc;
        else
            require(set.per_location == per_loc,
                    "anchor spec '" + spec.layer_name + "': per-location count " +
                        std::to_string(per_loc) + " differs from other layers");

        const int grid = image_size / spec.stride;
        AnchorSet::LayerRange range;
        range.name = spec.layer_name;
        range.stride = spec.stride;
        range.grid_h = range.grid_w = grid;
        range.begin = set.boxes.size();

        for (int iy = 0; iy < grid; ++iy) {
            for (int ix = 0; ix < grid; ++ix) {
                const double cx = (ix + 0.5) * spec.stride;
                const double cy = (iy + 0.5) * spec.stride;
                for (double s : spec.scales) {
                    for (double r : spec.aspect_ratios) {
                        // scale read as box width
                        set.boxes.push_back({cx, cy, s, s / r, 0.0});
                        // scale read as box height; identical to the above at
                        // ratio 1, so that duplicate is dropped
                        if (r != 1.0) set.boxes.push_back({cx, cy, s * r, s, 0.0});
                    }
                }
            }
        }
        range.end = set.boxes.size();
        set.layers.push_back(std::move(range));
    }
    return set;
}

MatchResult match_anchors(const AnchorSet& anchors, std::span<const OrientedBox> gts,
                          double pos_threshold, bool rotated_overlap) {
    require(!anchors.boxes.empty(), "match_anchors: empty anchor set");
    require(pos_threshold > 0.0 && pos_threshold < 1.0,
            "match_anchors: pos_threshold must be in (0, 1)");

    const std::size_t na = anchors.boxes.size();
    MatchResult res;
    res.anchor_to_gt.assign(na, -1);
    res.anchor_iou.assign(na, 0.0);

    if (gts.empty()) return res;

    const auto overlap = [&](const OrientedBox& anchor, const OrientedBox& gt) {
        if (rotated_overlap) return iou_rotated(anchor, gt);
        return iou_axis_aligned(anchor, enclosing_axis_aligned(gt));
    };

    // overlap table: gts are few, anchors many
    std::vector<std::vector<double>> iou(gts.size(), std::vector<double>(na, 0.0));
    for (std::size_t j = 0; j < gts.size(); ++j)
        for (std::size_t i = 0; i < na; ++i) iou[j][i] = overlap(anchors.boxes[i], gts[j]);

    // pass 1: every gt claims its best still-free anchor, regardless of threshold
    std::vector<char> forced(na, 0);
    res.forced.resize(gts.size(), -1);
    for (std::size_t j = 0; j < gts.size(); ++j) {
        std::int32_t best = -1;
        double best_iou = -1.0;
        for (std::size_t i = 0; i < na; ++i) {
            if (forced[i]) continue;
            if (iou[j][i] > best_iou) {
                best_iou = iou[j][i];
                best = static_cast<std::int32_t>(i);
            }
        }
        forced[best] = 1;
        res.forced[j] = best;
        res.anchor_to_gt[best] = static_cast<std::int32_t>(j);
        res.anchor_iou[best] = best_iou;
    }

    // pass 2: threshold matches for the rest, each anchor to its best gt
    for (std::size_t i = 0; i < na; ++i) {
        if (forced[i]) continue;
        std::int32_t best = -1;
        double best_iou = -1.0;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (iou[j][i] > best_iou) {
                best_iou = iou[j][i];
                best = static_cast<std::int32_t>(j);
            }
        }
        if (best_iou >= pos_threshold) {
            res.anchor_to_gt[i] = best;
            res.anchor_iou[i] = best_iou;
        }
    }
    return res;
}

TargetBundle build_targets(const MatchResult& match, const AnchorSet& anchors,
                           std::span<const OrientedBox> gts, std::span<const double> neg_losses,
                           const TargetOptions& opts) {
    const std::size_t na = anchors.boxes.size();
    require(match.anchor_to_gt.size() == na, "build_targets: match/anchor size mismatch");
    require(neg_losses.size() == na, "build_targets: neg_losses must cover every anchor");

    TargetBundle bundle;
    bundle.labels.assign(na, 0);

    for (std::size_t i = 0; i < na; ++i) {
        const std::int32_t j = match.anchor_to_gt[i];
        if (j < 0) continue;
        bundle.labels[i] = 1;
        bundle.offsets.emplace_back(static_cast<std::int32_t>(i),
                                    encode_offsets(gts[j], anchors.boxes[i]));
        ++bundle.positive_count;
    }

    std::vector<std::size_t> negatives;
    negatives.reserve(na);
    for (std::size_t i = 0; i < na; ++i)
        if (bundle.labels[i] == 0) negatives.push_back(i);

    const std::size_t keep =
        bundle.positive_count > 0
            ? static_cast<std::size_t>(opts.neg_pos_ratio * bundle.positive_count)
            : static_cast<std::size_t>(opts.neg_floor);

    if (negatives.size() > keep) {
        // hardest negatives first; ties resolved by lower anchor index
        std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
            return neg_losses[a] > neg_losses[b];
        });
        for (std::size_t k = keep; k < negatives.size(); ++k) bundle.labels[negatives[k]] = -1;
    }
    return bundle;
}

} // namespace sstd
