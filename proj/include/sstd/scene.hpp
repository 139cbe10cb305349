#pragma once

#include <vector>

#include "sstd/geometry.hpp"
#include "sstd/mask.hpp"
#include "sstd/tensor.hpp"

namespace sstd {

/// Supervision triple: a 3-channel image in [0,1], the ground-truth word
/// boxes, and the binary text mask (1 exactly on pixels inside some box).
struct SceneSample {
    Tensor image; // (1, 3, h, w)
    std::vector<OrientedBox> boxes;
    BinaryMask mask;

    int height() const { return image.h; }
    int width() const { return image.w; }
};

} // namespace sstd
