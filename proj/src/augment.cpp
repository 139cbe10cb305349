#include "sstd/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sstd/ops.hpp"

namespace sstd {
namespace {

// axis-aligned IoU between a square patch and a gt's enclosing rectangle
double patch_overlap(double x0, double y0, double size, const OrientedBox& gt) {
    const OrientedBox patch{x0 + size / 2, y0 + size / 2, size, size, 0.0};
    return iou_axis_aligned(patch, enclosing_axis_aligned(gt));
}

SceneSample crop_and_rescale(const SceneSample& sample, double x0, double y0, double patch,
                             int input_size) {
    SceneSample out;
    const double scale = static_cast<double>(input_size) / patch;

    // image: bilinear sample of the patch at the output grid
    out.image = Tensor(1, 3, input_size, input_size);
    const int sh = sample.image.h, sw = sample.image.w;
    for (int y = 0; y < input_size; ++y) {
        const double sy = y0 + (y + 0.5) / scale - 0.5;
        const int iy0 = std::clamp(static_cast<int>(std::floor(sy)), 0, sh - 1);
        const int iy1 = std::min(iy0 + 1, sh - 1);
        const float fy = static_cast<float>(std::clamp(sy, 0.0, double(sh - 1)) - iy0);
        for (int x = 0; x < input_size; ++x) {
            const double sx = x0 + (x + 0.5) / scale - 0.5;
            const int ix0 = std::clamp(static_cast<int>(std::floor(sx)), 0, sw - 1);
            const int ix1 = std::min(ix0 + 1, sw - 1);
            const float fx = static_cast<float>(std::clamp(sx, 0.0, double(sw - 1)) - ix0);
            for (int c = 0; c < 3; ++c) {
                const float* p = sample.image.plane(0, c);
                const float v = (1 - fy) * ((1 - fx) * p[iy0 * sw + ix0] + fx * p[iy0 * sw + ix1]) +
                                fy * ((1 - fx) * p[iy1 * sw + ix0] + fx * p[iy1 * sw + ix1]);
                out.image.at(0, c, y, x) = v;
            }
        }
    }

    // mask: nearest neighbour keeps it binary
    out.mask = BinaryMask(input_size, input_size);
    for (int y = 0; y < input_size; ++y) {
        const int iy = std::clamp(static_cast<int>(std::floor(y0 + (y + 0.5) / scale)), 0, sh - 1);
        for (int x = 0; x < input_size; ++x) {
            const int ix =
                std::clamp(static_cast<int>(std::floor(x0 + (x + 0.5) / scale)), 0, sw - 1);
            out.mask.at(y, x) = sample.mask.at(iy, ix);
        }
    }

    // boxes with centres inside the patch, shifted and uniformly scaled
    for (const OrientedBox& b : sample.boxes) {
        if (b.cx < x0 || b.cx >= x0 + patch || b.cy < y0 || b.cy >= y0 + patch) continue;
        OrientedBox nb = b;
        nb.cx = (b.cx - x0) * scale;
        nb.cy = (b.cy - y0) * scale;
        nb.w = b.w * scale;
        nb.h = b.h * scale;
        out.boxes.push_back(nb);
    }
    return out;
}

} // namespace

SceneSample mirror_sample(const SceneSample& sample) {
    SceneSample out;
    out.image = Tensor(1, 3, sample.image.h, sample.image.w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < sample.image.h; ++y)
            for (int x = 0; x < sample.image.w; ++x)
                out.image.at(0, c, y, x) = sample.image.at(0, c, y, sample.image.w - 1 - x);

    out.mask = BinaryMask(sample.mask.h, sample.mask.w);
    for (int y = 0; y < sample.mask.h; ++y)
        for (int x = 0; x < sample.mask.w; ++x)
            out.mask.at(y, x) = sample.mask.at(y, sample.mask.w - 1 - x);

    const double w = sample.image.w;
    for (const OrientedBox& b : sample.boxes) {
        OrientedBox nb = b;
        nb.cx = w - b.cx;
        nb.theta = b.theta == 0.0 ? 0.0 : -b.theta; // keep -0.0 out
        out.boxes.push_back(nb);
    }
    return out;
}

SceneSample augment_sample(const SceneSample& sample, Rng& rng, const AugmentConfig& cfg,
                           int input_size, AugmentInfo* info) {
    AugmentInfo local;
    const int sh = sample.image.h, sw = sample.image.w;
    const double max_patch = std::min(sh, sw);

    double x0 = 0, y0 = 0, patch = max_patch;
    bool found = false;

    if (!sample.boxes.empty() && !cfg.min_overlaps.empty()) {
        const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(cfg.min_overlaps.size()) - 1);
        local.drawn_min_overlap = cfg.min_overlaps[static_cast<std::size_t>(pick)];
        for (int attempt = 0; attempt < cfg.max_attempts && !found; ++attempt) {
            const double size = rng.uniform(cfg.min_patch_scale * max_patch, max_patch);
            const double px = rng.uniform(0.0, sw - size);
            const double py = rng.uniform(0.0, sh - size);
            double best = 0;
            for (const OrientedBox& gt : sample.boxes)
                best = std::max(best, patch_overlap(px, py, size, gt));
            if (best >= local.drawn_min_overlap) {
                x0 = px;
                y0 = py;
                patch = size;
                local.achieved_overlap = best;
                found = true;
            }
        }
    }
    local.whole_image = !found;
    if (!found) {
        x0 = 0;
        y0 = 0;
        patch = max_patch;
    }
    local.patch_x0 = x0;
    local.patch_y0 = y0;
    local.patch_size = patch;

    SceneSample out = crop_and_rescale(sample, x0, y0, patch, input_size);

    if (rng.bernoulli(0.5)) {
        out = mirror_sample(out);
        local.mirrored = true;
    }

    // photometric jitter; geometry and mask untouched
    if (rng.bernoulli(0.5)) {
        const float delta = static_cast<float>(rng.uniform(-cfg.brightness_delta,
                                                           cfg.brightness_delta));
        for (auto& v : out.image.data) v = std::clamp(v + delta, 0.0f, 1.0f);
    }
    if (rng.bernoulli(0.5)) {
        const float gain = static_cast<float>(rng.uniform(cfg.contrast_lo, cfg.contrast_hi));
        for (auto& v : out.image.data) v = std::clamp(0.5f + (v - 0.5f) * gain, 0.0f, 1.0f);
    }

    if (info) *info = local;
    return out;
}

} // namespace sstd
