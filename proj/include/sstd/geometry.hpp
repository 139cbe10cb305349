#pragma once

#include <array>
#include <span>
#include <vector>

#include "sstd/error.hpp"

namespace sstd {

/// Rotated word box: centre in input-image pixels, side lengths > 0, rotation
/// in radians within (-pi/2, pi/2].
struct OrientedBox {
    double cx = 0, cy = 0;
    double w = 1, h = 1;
    double theta = 0;
};

struct Detection {
    OrientedBox box;
    double score = 0; // text probability in [0, 1]
};

/// Regression targets: centre offsets normalised by anchor size, log size
/// ratios, and the rotation in radians.
struct BoxOffsets {
    double tx = 0, ty = 0, tw = 0, th = 0, ttheta = 0;
};

// Folds theta into (-pi/2, pi/2]; word boxes are symmetric under pi rotation.
double normalize_theta(double theta);

// Corner coordinates in clockwise order (image coordinates, y down),
// starting at the corner that is top-left for an unrotated box.
std::array<std::array<double, 2>, 4> box_corners(const OrientedBox& b);

// Axis-aligned rectangle (theta = 0) enclosing a rotated box.
OrientedBox enclosing_axis_aligned(const OrientedBox& b);

/// IoU of two axis-aligned boxes. Both thetas must be exactly 0; use
/// iou_rotated otherwise.
double iou_axis_aligned(const OrientedBox& a, const OrientedBox& b);

/// Exact rotated-rectangle IoU: one rectangle is clipped against the other's
/// four half-planes and the intersection area comes from the shoelace formula.
/// Throws on near-zero-area boxes.
double iou_rotated(const OrientedBox& a, const OrientedBox& b);

/// Greedy suppression: sort by descending score (ties keep lower input
/// index first), keep a detection iff its IoU with every kept one is <=
/// threshold. `rotated` selects the overlap measure (rotated-polygon IoU or
/// IoU of axis-aligned enclosing rectangles).
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold,
                           bool rotated = true);

/// Offsets that map an axis-aligned anchor onto a ground-truth box.
BoxOffsets encode_offsets(const OrientedBox& gt, const OrientedBox& anchor);

/// Inverse of encode_offsets; theta is normalised into (-pi/2, pi/2].
OrientedBox decode_offsets(const BoxOffsets& offsets, const OrientedBox& anchor);

} // namespace sstd
