#include "sstd/eval.hpp"

#include <algorithm>
#include <numeric>

namespace sstd {

EvalReport evaluate_detections(const std::vector<std::vector<Detection>>& dets,
                               const std::vector<std::vector<OrientedBox>>& gts,
                               double iou_threshold, bool rotated) {
    require(dets.size() == gts.size(), "evaluate_detections: image count mismatch (" +
                                           std::to_string(dets.size()) + " vs " +
                                           std::to_string(gts.size()) + ")");
    require(iou_threshold > 0 && iou_threshold < 1,
            "evaluate_detections: iou_threshold must be in (0, 1)");

    const auto overlap = [&](const OrientedBox& a, const OrientedBox& b) {
        if (rotated) return iou_rotated(a, b);
        return iou_axis_aligned(enclosing_axis_aligned(a), enclosing_axis_aligned(b));
    };

    EvalReport report;
    report.per_image.resize(dets.size());

    for (std::size_t img = 0; img < dets.size(); ++img) {
        const auto& d = dets[img];
        const auto& g = gts[img];
        report.total_gt += static_cast<int>(g.size());
        report.total_det += static_cast<int>(d.size());

        std::vector<std::size_t> order(d.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return d[a].score > d[b].score; });

        std::vector<char> gt_taken(g.size(), 0);
        for (std::size_t di : order) {
            int best_gt = -1;
            double best_iou = 0;
            for (std::size_t gi = 0; gi < g.size(); ++gi) {
                if (gt_taken[gi]) continue;
                const double v = overlap(d[di].box, g[gi]);
                if (v > best_iou) {
                    best_iou = v;
                    best_gt = static_cast<int>(gi);
                }
            }
            if (best_gt >= 0 && best_iou >= iou_threshold) {
                gt_taken[best_gt] = 1;
                ++report.total_matched;
                report.per_image[img].push_back({static_cast<int>(di), best_gt, best_iou});
            }
        }
    }

    report.recall = report.total_gt > 0
                        ? static_cast<double>(report.total_matched) / report.total_gt
                        : 1.0;
    report.precision = report.total_det > 0
                           ? static_cast<double>(report.total_matched) / report.total_det
                           : 1.0;
    const double pr = report.precision + report.recall;
    report.f_measure = pr > 0 ? 2.0 * report.precision * report.recall / pr : 0.0;
    return report;
}

} // namespace sstd
