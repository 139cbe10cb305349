#pragma once

#include <cstdint>
#include <vector>

namespace sstd {

// Binary pixel map, 1 = text.
struct BinaryMask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), data(static_cast<std::size_t>(h_) * w_, 0) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
};

} // namespace sstd
