#pragma once

#include "sstd/config.hpp"
#include "sstd/rng.hpp"
#include "sstd/scene.hpp"

namespace sstd {

struct AugmentInfo {
    double drawn_min_overlap = 0; // 0 when the whole image was used
    bool whole_image = false;
    double achieved_overlap = 0;  // best patch/gt overlap, patches only
    double patch_x0 = 0, patch_y0 = 0, patch_size = 0;
    bool mirrored = false;
};

// Horizontal flip of image, mask and boxes (an involution).
SceneSample mirror_sample(const SceneSample& sample);

/// SSD-style patch sampling: draws one of the configured minimum overlaps,
/// retries square patches until one overlaps some ground-truth box at least
/// that much (whole image after max_attempts), keeps boxes whose centres fall
/// inside, rescales everything to input_size, then mirrors with p=0.5 and
/// jitters brightness/contrast. Patches are square so the rescale is uniform
/// and oriented boxes stay exact.
SceneSample augment_sample(const SceneSample& sample, Rng& rng, const AugmentConfig& cfg,
                           int input_size, AugmentInfo* info = nullptr);

} // namespace sstd
