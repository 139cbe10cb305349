#include "sstd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sstd/rng.hpp"

namespace sstd {

double gradcheck(std::span<TensorT<double>* const> inputs,
                 const std::function<double()>& loss_fn,
                 const std::function<std::vector<std::vector<double>>()>& grad_fn,
                 const GradCheckOptions& opts) {
    require(opts.eps > 0, "gradcheck: eps must be positive");
    const auto analytic = grad_fn();
    require(analytic.size() == inputs.size(), "gradcheck: grad_fn returned wrong input count");
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        require(analytic[t].size() == inputs[t]->size(),
                "gradcheck: gradient " + std::to_string(t) + " has wrong size");
        for (double g : analytic[t])
            if (!std::isfinite(g)) fail_numeric("gradcheck: non-finite analytic gradient");
    }

    Rng rng(opts.probe_seed);
    double worst = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        TensorT<double>& tensor = *inputs[t];
        std::vector<std::size_t> probes(tensor.size());
        std::iota(probes.begin(), probes.end(), std::size_t{0});
        if (opts.max_probes_per_tensor > 0 &&
            probes.size() > static_cast<std::size_t>(opts.max_probes_per_tensor)) {
            // partial Fisher-Yates, keep the first max_probes entries
            for (int i = 0; i < opts.max_probes_per_tensor; ++i) {
                const auto j = static_cast<std::size_t>(
                    rng.uniform_int(i, static_cast<std::int64_t>(probes.size()) - 1));
                std::swap(probes[i], probes[j]);
            }
            probes.resize(static_cast<std::size_t>(opts.max_probes_per_tensor));
        }

        for (std::size_t idx : probes) {
            if (opts.skip && opts.skip(static_cast<int>(t), idx)) continue;
            const double saved = tensor.data[idx];
            tensor.data[idx] = saved + opts.eps;
            const double plus = loss_fn();
            tensor.data[idx] = saved - opts.eps;
            const double minus = loss_fn();
            tensor.data[idx] = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus))
                fail_numeric("gradcheck: non-finite loss during finite differencing");
            const double numeric = (plus - minus) / (2.0 * opts.eps);
            const double a = analytic[t][idx];
            const double rel =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace sstd
