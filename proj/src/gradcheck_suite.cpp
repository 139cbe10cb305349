#include "sstd/gradcheck_suite.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <ostream>

#include "sstd/attention.hpp"
#include "sstd/gradcheck.hpp"
#include "sstd/inception.hpp"
#include "sstd/ops.hpp"
#include "sstd/rng.hpp"

namespace sstd {
namespace {

using ops::conv2d;
using T64 = TensorT<double>;

void fill_random(T64& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = rng.uniform(lo, hi);
}

T64 random_tensor(int n, int c, int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
    T64 t(n, c, h, w);
    fill_random(t, rng, lo, hi);
    return t;
}

// fixed projection makes any op a scalar loss: loss = sum(cot * out)
std::vector<double> random_cotangent(std::size_t n, Rng& rng) {
    std::vector<double> c(n);
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);
    return c;
}

double project(const T64& out, const std::vector<double>& cot) {
    double acc = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * cot[i];
    return acc;
}

std::vector<double> take_grad(const T64& t) { return t.grad; }

struct Check {
    const char* name;
    double tolerance;
    double worst = 0;
};

// --- individual op checks -------------------------------------------------

double check_conv2d(Rng& rng, double eps, bool dilated) {
    T64 input = random_tensor(2, 3, dilated ? 8 : 6, dilated ? 8 : 6, rng);
    ConvSpec spec = dilated ? ConvSpec::simple(3, 4, 3, 2, 2) : ConvSpec::simple(3, 4, 3, 1);
    if (dilated) spec.sh = spec.sw = 1;
    T64 weights = random_tensor(4, 3, 3, 3, rng);
    T64 bias = random_tensor(1, 4, 1, 1, rng);

    const int ho = spec.out_h(input.h), wo = spec.out_w(input.w);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(2 * 4) * ho * wo, cot_rng);

    const auto loss = [&] {
        auto out = conv2d(input, weights, std::span<const double>(bias.data), spec);
        return project(out, cot);
    };
    const auto grads = [&] {
        input.ensure_grad();
        weights.ensure_grad();
        input.zero_grad();
        weights.zero_grad();
        std::vector<double> bgrad(4, 0.0);
        auto out = conv2d(input, weights, std::span<const double>(bias.data), spec);
        out.grad = cot;
        ops::conv2d_backward(input, weights, std::span<double>(bgrad), spec, out);
        return std::vector<std::vector<double>>{take_grad(input), take_grad(weights), bgrad};
    };
    std::array<T64*, 3> inputs = {&input, &weights, &bias};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_transposed_conv(Rng& rng, double eps) {
    const int factor = 2;
    T64 input = random_tensor(1, 3, 4, 4, rng);
    T64 weights = random_tensor(3, 2, 2 * factor, 2 * factor, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(2) * 8 * 8, cot_rng);

    const auto loss = [&] {
        return project(ops::transposed_conv2d(input, weights, factor), cot);
    };
    const auto grads = [&] {
        input.ensure_grad();
        weights.ensure_grad();
        input.zero_grad();
        weights.zero_grad();
        auto out = ops::transposed_conv2d(input, weights, factor);
        out.grad = cot;
        ops::transposed_conv2d_backward(input, weights, factor, out);
        return std::vector<std::vector<double>>{take_grad(input), take_grad(weights)};
    };
    std::array<T64*, 2> inputs = {&input, &weights};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_maxpool(Rng& rng, double eps) {
    T64 input = random_tensor(2, 2, 6, 6, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(2 * 2) * 3 * 3, cot_rng);

    const auto loss = [&] { return project(ops::maxpool2d(input, 2, 2, 0), cot); };
    const auto grads = [&] {
        input.ensure_grad();
        input.zero_grad();
        auto res = ops::maxpool2d_fwd(input, 2, 2, 0);
        res.output.grad = cot;
        ops::maxpool2d_backward(res, input);
        return std::vector<std::vector<double>>{take_grad(input)};
    };
    std::array<T64*, 1> inputs = {&input};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_concat(Rng& rng, double eps) {
    T64 a = random_tensor(1, 2, 4, 4, rng);
    T64 b = random_tensor(1, 3, 4, 4, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(5) * 16, cot_rng);
    const auto loss = [&] {
        const std::array<const T64*, 2> parts = {&a, &b};
        return project(ops::channel_concat<double>(parts), cot);
    };
    const auto grads = [&] {
        a.ensure_grad();
        b.ensure_grad();
        a.zero_grad();
        b.zero_grad();
        const std::array<const T64*, 2> parts = {&a, &b};
        auto out = ops::channel_concat<double>(parts);
        out.grad = cot;
        const std::array<T64*, 2> gparts = {&a, &b};
        ops::channel_concat_backward(out, std::span<T64* const>(gparts));
        return std::vector<std::vector<double>>{take_grad(a), take_grad(b)};
    };
    std::array<T64*, 2> inputs = {&a, &b};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_softmax(Rng& rng, double eps) {
    T64 logits = random_tensor(1, 3, 4, 4, rng, -2.0, 2.0);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(logits.size(), cot_rng);
    const auto loss = [&] { return project(ops::channel_softmax(logits), cot); };
    const auto grads = [&] {
        logits.ensure_grad();
        logits.zero_grad();
        auto out = ops::channel_softmax(logits);
        out.grad = cot;
        ops::channel_softmax_backward(out, logits);
        return std::vector<std::vector<double>>{take_grad(logits)};
    };
    std::array<T64*, 1> inputs = {&logits};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_scale(Rng& rng, double eps) {
    T64 features = random_tensor(1, 4, 5, 5, rng);
    T64 map = random_tensor(1, 1, 5, 5, rng, 0.0, 1.0);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(features.size(), cot_rng);
    const auto loss = [&] { return project(ops::elementwise_scale(features, map), cot); };
    const auto grads = [&] {
        features.ensure_grad();
        map.ensure_grad();
        features.zero_grad();
        map.zero_grad();
        auto out = ops::elementwise_scale(features, map);
        out.grad = cot;
        ops::elementwise_scale_backward(features, map, out);
        return std::vector<std::vector<double>>{take_grad(features), take_grad(map)};
    };
    std::array<T64*, 2> inputs = {&features, &map};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_smooth_l1(Rng& rng, double eps) {
    T64 pred = random_tensor(1, 1, 1, 12, rng, -2.5, 2.5);
    T64 target = random_tensor(1, 1, 1, 12, rng, -2.5, 2.5);
    const auto loss = [&] {
        return ops::smooth_l1(std::span<const double>(pred.data),
                              std::span<const double>(target.data));
    };
    const auto grads = [&] {
        std::vector<double> g(pred.size(), 0.0);
        ops::smooth_l1_backward(std::span<const double>(pred.data),
                                std::span<const double>(target.data), 1.0, std::span<double>(g));
        return std::vector<std::vector<double>>{g};
    };
    std::array<T64*, 1> inputs = {&pred};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    // the |x| = 1 kink is one-sided; skip probes inside 10*eps of it
    opts.skip = [&](int, std::size_t i) {
        return std::abs(std::abs(pred.data[i] - target.data[i]) - 1.0) < 10 * eps;
    };
    return gradcheck(inputs, loss, grads, opts);
}

double check_xent(Rng& rng, double eps) {
    T64 logits = random_tensor(1, 2, 4, 4, rng, -2.0, 2.0);
    std::vector<int> labels(16);
    for (auto& l : labels) {
        const auto r = rng.uniform_int(0, 2);
        l = r == 2 ? -1 : static_cast<int>(r); // mixes in ignored positions
    }
    labels[0] = 1; // at least one active
    const auto loss = [&] { return ops::softmax_cross_entropy(logits, labels, -1); };
    const auto grads = [&] {
        logits.ensure_grad();
        logits.zero_grad();
        ops::softmax_cross_entropy_backward(logits, labels, -1, 1.0);
        return std::vector<std::vector<double>>{take_grad(logits)};
    };
    std::array<T64*, 1> inputs = {&logits};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

double check_resize(Rng& rng, double eps) {
    T64 input = random_tensor(1, 2, 6, 6, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(2) * 4 * 4, cot_rng);
    const auto loss = [&] { return project(ops::bilinear_resize(input, 4, 4), cot); };
    const auto grads = [&] {
        input.ensure_grad();
        input.zero_grad();
        auto out = ops::bilinear_resize(input, 4, 4);
        out.grad = cot;
        ops::bilinear_resize_backward(input, out);
        return std::vector<std::vector<double>>{take_grad(input)};
    };
    std::array<T64*, 1> inputs = {&input};
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    return gradcheck(inputs, loss, grads, opts);
}

// --- composed paths --------------------------------------------------------

std::vector<T64*> param_pointers(ModelParamsT<double>& params) {
    std::vector<T64*> out;
    for (auto& [name, t] : params.tensors) out.push_back(&t);
    return out;
}

std::vector<std::vector<double>> param_grads(ModelParamsT<double>& params) {
    std::vector<std::vector<double>> out;
    for (auto& [name, t] : params.tensors) out.push_back(t.grad);
    return out;
}

double check_attention_path(Rng& rng, double eps) {
    const int factor = 8, width = 3, in_ch = 3;
    ModelParamsT<double> params;
    Rng init_rng(rng.next_u64());
    init_attention_params<double>(params, "att", in_ch, width, factor, init_rng);
    for (auto& [name, t] : params.tensors) fill_random(t, rng, -0.4, 0.4);

    T64 f_aif1 = random_tensor(1, in_ch, 2, 2, rng);
    const std::vector<AttentionLayerSize> sizes = {{"L0", 2, 2}, {"L1", 4, 4}};

    Rng cot_rng(rng.next_u64());
    const auto cot_alpha = random_cotangent(static_cast<std::size_t>(2) * 16 * 16, cot_rng);
    const auto cot_r0 = random_cotangent(4, cot_rng);
    const auto cot_r1 = random_cotangent(16, cot_rng);

    const auto run = [&](bool with_grads) {
        auto trace = compute_attention(f_aif1, params, "att", factor, std::span(sizes));
        double loss = project(trace.maps.alpha, cot_alpha) +
                      project(trace.maps.resized.at("L0"), cot_r0) +
                      project(trace.maps.resized.at("L1"), cot_r1);
        if (with_grads) {
            trace.maps.alpha.grad = cot_alpha;
            trace.maps.resized.at("L0").grad = cot_r0;
            trace.maps.resized.at("L1").grad = cot_r1;
            attention_backward(f_aif1, params, "att", factor, trace);
        }
        return loss;
    };

    const auto loss = [&] { return run(false); };
    const auto grads = [&] {
        for (auto& [n, t] : params.tensors) t.zero_grad();
        f_aif1.ensure_grad();
        f_aif1.zero_grad();
        run(true);
        auto out = param_grads(params);
        out.push_back(take_grad(f_aif1));
        return out;
    };

    auto inputs = param_pointers(params);
    inputs.push_back(&f_aif1);
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    opts.max_probes_per_tensor = 200;
    return gradcheck(inputs, loss, grads, opts);
}

double check_inception_path(Rng& rng, double eps) {
    const int in_ch = 3, branch = 2;
    ModelParamsT<double> params;
    Rng init_rng(rng.next_u64());
    init_inception_params<double>(params, "inc", in_ch, branch, init_rng);
    for (auto& [name, t] : params.tensors) fill_random(t, rng, -0.5, 0.5);

    T64 features = random_tensor(1, in_ch, 8, 8, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(4 * branch) * 64, cot_rng);

    const auto loss = [&] {
        auto trace = inception_block(features, params, "inc");
        return project(trace.out, cot);
    };
    const auto grads = [&] {
        for (auto& [n, t] : params.tensors) t.zero_grad();
        features.ensure_grad();
        features.zero_grad();
        auto trace = inception_block(features, params, "inc");
        trace.out.grad = cot;
        inception_backward(features, params, "inc", trace);
        auto out = param_grads(params);
        out.push_back(take_grad(features));
        return out;
    };

    auto inputs = param_pointers(params);
    inputs.push_back(&features);
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    opts.max_probes_per_tensor = 200;
    return gradcheck(inputs, loss, grads, opts);
}

double check_aif_path(Rng& rng, double eps) {
    const int ch = 3, out_ch = 4;
    ModelParamsT<double> params;
    Rng init_rng(rng.next_u64());
    init_aif_params<double>(params, "aif", 3 * ch, out_ch, init_rng);
    for (auto& [name, t] : params.tensors) fill_random(t, rng, -0.5, 0.5);

    T64 lower = random_tensor(1, ch, 8, 8, rng);
    T64 current = random_tensor(1, ch, 4, 4, rng);
    T64 higher = random_tensor(1, ch, 2, 2, rng);
    Rng cot_rng(rng.next_u64());
    const auto cot = random_cotangent(static_cast<std::size_t>(out_ch) * 16, cot_rng);

    const auto loss = [&] {
        auto trace = aggregate_aif(&lower, current, &higher, params, "aif");
        return project(trace.out, cot);
    };
    const auto grads = [&] {
        for (auto& [n, t] : params.tensors) t.zero_grad();
        lower.ensure_grad();
        current.ensure_grad();
        higher.ensure_grad();
        lower.zero_grad();
        current.zero_grad();
        higher.zero_grad();
        auto trace = aggregate_aif(&lower, current, &higher, params, "aif");
        trace.out.grad = cot;
        aif_backward(&lower, current, &higher, params, "aif", trace);
        auto out = param_grads(params);
        out.push_back(take_grad(lower));
        out.push_back(take_grad(current));
        out.push_back(take_grad(higher));
        return out;
    };

    auto inputs = param_pointers(params);
    inputs.push_back(&lower);
    inputs.push_back(&current);
    inputs.push_back(&higher);
    GradCheckOptions opts;
    opts.eps = eps;
    opts.probe_seed = rng.next_u64();
    opts.max_probes_per_tensor = 200;
    return gradcheck(inputs, loss, grads, opts);
}

} // namespace

bool run_gradcheck_suite(int seeds, double eps, std::ostream& out) {
    std::array<Check, 12> checks = {{
        {"conv2d", 1e-5},
        {"conv2d dilated", 1e-5},
        {"transposed_conv2d", 1e-5},
        {"maxpool2d", 1e-5},
        {"channel_concat", 1e-5},
        {"channel_softmax", 1e-5},
        {"elementwise_scale", 1e-5},
        {"smooth_l1", 1e-5},
        {"softmax_cross_entropy", 1e-5},
        {"bilinear_resize", 1e-5},
        {"attention path", 1e-4},
        {"inception path", 1e-4},
    }};
    // the aggregation path rides with the rest
    std::array<Check, 1> extra = {{{"aif path", 1e-4}}};

    for (int s = 0; s < seeds; ++s) {
        Rng rng(1000 + static_cast<std::uint64_t>(s));
        checks[0].worst = std::max(checks[0].worst, check_conv2d(rng, eps, false));
        checks[1].worst = std::max(checks[1].worst, check_conv2d(rng, eps, true));
        checks[2].worst = std::max(checks[2].worst, check_transposed_conv(rng, eps));
        checks[3].worst = std::max(checks[3].worst, check_maxpool(rng, eps));
        checks[4].worst = std::max(checks[4].worst, check_concat(rng, eps));
        checks[5].worst = std::max(checks[5].worst, check_softmax(rng, eps));
        checks[6].worst = std::max(checks[6].worst, check_scale(rng, eps));
        checks[7].worst = std::max(checks[7].worst, check_smooth_l1(rng, eps));
        checks[8].worst = std::max(checks[8].worst, check_xent(rng, eps));
        checks[9].worst = std::max(checks[9].worst, check_resize(rng, eps));
        checks[10].worst = std::max(checks[10].worst, check_attention_path(rng, eps));
        checks[11].worst = std::max(checks[11].worst, check_inception_path(rng, eps));
        extra[0].worst = std::max(extra[0].worst, check_aif_path(rng, eps));
    }

    bool ok = true;
    const auto report = [&](const Check& c) {
        const bool pass = c.worst < c.tolerance;
        ok = ok && pass;
        out << (pass ? "ok   " : "FAIL ") << c.name << ": max rel err " << c.worst << " (tol "
            << c.tolerance << ")\n";
    };
    for (const auto& c : checks) report(c);
    for (const auto& c : extra) report(c);
    return ok;
}

} // namespace sstd
