#pragma once

#include <cstdint>

#include "sstd/scene.hpp"

namespace sstd {

struct SceneGenConfig {
    int size = 128;
    int min_words = 3, max_words = 6;
    double word_height_lo = 10.0, word_height_hi = 22.0;
    double aspect_lo = 1.8, aspect_hi = 4.5;  // word w/h
    double rotation_range = 0.3;              // theta drawn from [-r, r]
    double noise = 0.05;                      // background speckle amplitude
    int max_attempts = 40;                    // placement retries per word
    double max_pair_iou = 0.1;                // separability bound between words
};

/// Renders a synthetic scene: dark glyph-like bar patterns inside each
/// oriented word box over a bright textured background. Deterministic per
/// seed; words that cannot be placed within the retry budget are dropped.
/// Pixel values are quantised to the 8-bit grid so disk round trips are exact.
SceneSample generate_scene(std::uint64_t seed, const SceneGenConfig& cfg = {});

} // namespace sstd
