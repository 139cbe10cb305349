#pragma once

#include <vector>

#include "sstd/geometry.hpp"

namespace sstd {

struct MatchRecord {
    int det_index = -1;
    int gt_index = -1;
    double iou = 0;
};

struct EvalReport {
    double recall = 0, precision = 0, f_measure = 0;
    int total_gt = 0, total_det = 0, total_matched = 0;
    std::vector<std::vector<MatchRecord>> per_image;
};

/// Word-level scoring by greedy one-to-one matching: detections in descending
/// score order each claim the highest-IoU unmatched ground truth with IoU >=
/// threshold. recall = matches/#gt, precision = matches/#det, f = 2PR/(P+R)
/// (0 when P+R = 0). `rotated` switches the overlap from axis-aligned
/// enclosing rectangles to exact rotated IoU.
EvalReport evaluate_detections(const std::vector<std::vector<Detection>>& dets,
                               const std::vector<std::vector<OrientedBox>>& gts,
                               double iou_threshold = 0.5, bool rotated = false);

} // namespace sstd
