#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sstd/tensor.hpp"

namespace sstd {

struct GradCheckOptions {
    double eps = 1e-5;
    // 0 = probe every element; otherwise probe a random subset of this size
    // per input tensor (without replacement).
    int max_probes_per_tensor = 0;
    std::uint64_t probe_seed = 12345;
    // Optional: return true to exclude an element (e.g. near a loss kink).
    std::function<bool(int tensor, std::size_t index)> skip;
};

/// Compares analytic gradients against central finite differences.
///
/// `loss_fn` must recompute the scalar loss from the *current* contents of the
/// input tensors (they are perturbed in place). `grad_fn` returns one flat
/// gradient vector per input, evaluated at the unperturbed point. Returns the
/// worst relative error  |a - n| / max(1, |a|, |n|)  over all probed elements.
/// Throws if any loss or gradient value is non-finite.
double gradcheck(std::span<TensorT<double>* const> inputs,
                 const std::function<double()>& loss_fn,
                 const std::function<std::vector<std::vector<double>>()>& grad_fn,
                 const GradCheckOptions& opts = {});

} // namespace sstd
