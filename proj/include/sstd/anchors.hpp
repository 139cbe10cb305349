#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sstd/geometry.hpp"

namespace sstd {

/// Default-box recipe for one prediction layer. Every scale can act as the
/// box width or as the box height, so each (scale, ratio) pair yields two
/// boxes except ratio 1, where both readings coincide.
struct LayerAnchorSpec {
    std::string layer_name;
    int stride = 8;                    // input pixels per feature-map cell
    std::vector<double> scales;        // strictly increasing, in input pixels
    std::vector<double> aspect_ratios; // w/h, all positive
};

struct AnchorSet {
    struct LayerRange {
        std::string name;
        int stride = 0;
        int grid_h = 0, grid_w = 0;
        std::size_t begin = 0, end = 0; // index range into boxes
    };

    std::vector<OrientedBox> boxes; // all axis-aligned (theta == 0)
    std::vector<LayerRange> layers;
    int per_location = 0;

    std::size_t size() const { return boxes.size(); }
};

/// Materialises the default boxes for every layer on a square image. Centres
/// sit at cell centres ((i + 0.5) * stride); boxes may extend past the image
/// border and are kept unclipped. Anchor order: layers in spec order, cells
/// row-major, then per cell (scale outer, ratio inner, width-reading before
/// height-reading).
AnchorSet generate_default_boxes(std::span<const LayerAnchorSpec> specs, int image_size);

struct MatchResult {
    std::vector<std::int32_t> anchor_to_gt; // -1 = unassigned / background
    std::vector<double> anchor_iou;         // overlap with the assigned gt
    std::vector<std::int32_t> forced;       // best anchor per gt (always positive)
};

/// SSD-style assignment: each ground truth first claims its best-overlap
/// anchor unconditionally (ties: lower anchor index; gts processed in order,
/// each claiming among still-unforced anchors); then every remaining anchor
/// with overlap >= pos_threshold joins its best gt. Overlap is measured
/// against the gt's axis-aligned enclosing rectangle unless rotated_overlap.
MatchResult match_anchors(const AnchorSet& anchors, std::span<const OrientedBox> gts,
                          double pos_threshold, bool rotated_overlap = false);

struct TargetBundle {
    std::vector<std::int8_t> labels;                    // 0 bg, 1 text, -1 ignored
    std::vector<std::pair<std::int32_t, BoxOffsets>> offsets; // per positive anchor
    int positive_count = 0;
};

struct TargetOptions {
    double neg_pos_ratio = 3.0;
    int neg_floor = 32; // negatives kept when there are no positives
};

/// Labels positives from the match, encodes their regression targets and
/// keeps only the hardest negatives: those with the largest `neg_losses`
/// entries, up to neg_pos_ratio * positives (or neg_floor when the image has
/// no positives). Everything else is marked ignored.
TargetBundle build_targets(const MatchResult& match, const AnchorSet& anchors,
                           std::span<const OrientedBox> gts, std::span<const double> neg_losses,
                           const TargetOptions& opts = {});

} // namespace sstd
