#pragma once

#include <string>

#include "sstd/mask.hpp"
#include "sstd/tensor.hpp"

namespace sstd {

// Binary portable pixel/gray maps: zero-dependency, bit-exact I/O.

// (1,3,h,w) tensor in [0,1] <-> P6, maxval 255
void write_ppm(const Tensor& image, const std::string& path);
Tensor read_ppm(const std::string& path);

// mask <-> P5 with values {0, 255}
void write_pgm(const BinaryMask& mask, const std::string& path);
BinaryMask read_pgm(const std::string& path);

// (1,1,h,w) tensor in [0,1] -> P5 grayscale
void write_pgm_gray(const Tensor& gray, const std::string& path);

} // namespace sstd
