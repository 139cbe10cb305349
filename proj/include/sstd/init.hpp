#pragma once

#include <cmath>

#include "sstd/rng.hpp"
#include "sstd/tensor.hpp"

namespace sstd {

// Uniform fan-in init, U(-b, b) with b = gain * sqrt(3 / fan_in). Unit gain
// preserves activation variance through this op set (no rectifier anywhere,
// so the usual sqrt(2) correction would double variance at every layer).
template <typename T>
void fan_in_uniform_fill(TensorT<T>& t, int fan_in, Rng& rng, double gain = 1.0) {
    const double bound = gain * std::sqrt(3.0 / fan_in);
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

} // namespace sstd
