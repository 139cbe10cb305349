#include "sstd/attention.hpp"

#include <cmath>

#include "sstd/init.hpp"
#include "sstd/ops.hpp"

namespace sstd {
namespace {

constexpr double kLogFloor = 1e-12;

ConvSpec conv3x3(int in_ch, int out_ch) { return ConvSpec::simple(in_ch, out_ch, 3, 1); }
ConvSpec conv1x1(int in_ch, int out_ch) { return ConvSpec::simple(in_ch, out_ch, 1, 0); }

} // namespace

template <typename T>
void init_attention_params(ModelParamsT<T>& params, const std::string& prefix, int in_channels,
                           int width, int factor, Rng& rng) {
    auto& c1 = params.add(prefix + ".conv1.w", TensorT<T>(width, in_channels, 3, 3));
    fan_in_uniform_fill(c1, in_channels * 9, rng);
    params.add(prefix + ".conv1.b", TensorT<T>(1, width, 1, 1));
    auto& c2 = params.add(prefix + ".conv2.w", TensorT<T>(width, width, 3, 3));
    fan_in_uniform_fill(c2, width * 9, rng);
    params.add(prefix + ".conv2.b", TensorT<T>(1, width, 1, 1));
    params.add(prefix + ".deconv.w", ops::bilinear_deconv_weights<T>(width, factor));
    // zero projection -> softmax of equal logits -> attention starts at exactly 0.5
    params.add(prefix + ".proj.w", TensorT<T>(2, width, 1, 1));
    params.add(prefix + ".proj.b", TensorT<T>(1, 2, 1, 1));
}

template <typename T>
AttentionTrace<T> compute_attention(const TensorT<T>& f_aif1, const ModelParamsT<T>& params,
                                    const std::string& prefix, int factor,
                                    std::span<const AttentionLayerSize> layer_sizes) {
    require(factor >= 1, "compute_attention: factor must be >= 1");
    const TensorT<T>& c1w = params.at(prefix + ".conv1.w");
    const int width = c1w.n;

    AttentionTrace<T> trace;
    trace.h1 =
        ops::conv2d(f_aif1, c1w, params.bias(prefix + ".conv1.b"), conv3x3(f_aif1.c, width));
    trace.h2 = ops::conv2d(trace.h1, params.at(prefix + ".conv2.w"),
                           params.bias(prefix + ".conv2.b"), conv3x3(width, width));
    trace.up = ops::transposed_conv2d(trace.h2, params.at(prefix + ".deconv.w"), factor);
    trace.logits = ops::conv2d(trace.up, params.at(prefix + ".proj.w"),
                               params.bias(prefix + ".proj.b"), conv1x1(width, 2));
    trace.maps.alpha = ops::channel_softmax(trace.logits);
    trace.maps.alpha.ensure_grad();

    const TensorT<T>& alpha = trace.maps.alpha;
    trace.maps.alpha_pos = TensorT<T>(alpha.n, 1, alpha.h, alpha.w);
    for (int bn = 0; bn < alpha.n; ++bn) {
        const T* src = alpha.plane(bn, 1);
        std::copy(src, src + static_cast<std::size_t>(alpha.h) * alpha.w,
                  trace.maps.alpha_pos.plane(bn, 0));
    }

    for (const AttentionLayerSize& ls : layer_sizes) {
        auto resized = ops::bilinear_resize(trace.maps.alpha_pos, ls.h, ls.w);
        resized.ensure_grad();
        trace.maps.resized.emplace(ls.name, std::move(resized));
    }
    return trace;
}

template <typename T>
void attention_backward(TensorT<T>& f_aif1, ModelParamsT<T>& params, const std::string& prefix,
                        int factor, AttentionTrace<T>& trace) {
    TensorT<T>& alpha = trace.maps.alpha;
    TensorT<T>& alpha_pos = trace.maps.alpha_pos;
    alpha_pos.ensure_grad();

    for (auto& [name, resized] : trace.maps.resized) {
        if (!resized.grad.empty()) ops::bilinear_resize_backward(alpha_pos, resized);
    }
    // alpha_pos is a copy of alpha channel 1
    for (int bn = 0; bn < alpha.n; ++bn) {
        const T* src = alpha_pos.grad.data() + alpha_pos.index(bn, 0, 0, 0);
        T* dst = alpha.grad.data() + alpha.index(bn, 1, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(alpha.h) * alpha.w; ++i)
            dst[i] += src[i];
    }

    trace.logits.ensure_grad();
    ops::channel_softmax_backward(alpha, trace.logits);

    TensorT<T>& c1w = params.at(prefix + ".conv1.w");
    TensorT<T>& c2w = params.at(prefix + ".conv2.w");
    const int width = c1w.n;

    trace.up.ensure_grad();
    ops::conv2d_backward(trace.up, params.at(prefix + ".proj.w"),
                         params.bias_grad(prefix + ".proj.b"), conv1x1(width, 2), trace.logits);
    trace.h2.ensure_grad();
    ops::transposed_conv2d_backward(trace.h2, params.at(prefix + ".deconv.w"), factor, trace.up);
    trace.h1.ensure_grad();
    ops::conv2d_backward(trace.h1, c2w, params.bias_grad(prefix + ".conv2.b"),
                         conv3x3(width, width), trace.h2);
    ops::conv2d_backward(f_aif1, c1w, params.bias_grad(prefix + ".conv1.b"),
                         conv3x3(f_aif1.c, width), trace.h1);
}

template <typename T>
TensorT<T> encode_attention(const TensorT<T>& features, const AttentionMapsT<T>& maps,
                            const std::string& layer_name) {
    auto it = maps.resized.find(layer_name);
    require(it != maps.resized.end(),
            "encode_attention: no resized attention map for layer '" + layer_name + "'");
    return ops::elementwise_scale(features, it->second);
}

template <typename T>
T attention_loss(const TensorT<T>& alpha, const BinaryMask& mask) {
    require(alpha.c == 2, "attention_loss: alpha must have 2 channels");
    require(mask.h == alpha.h && mask.w == alpha.w,
            "attention_loss: mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                " does not match alpha " + alpha.shape_str());
    const std::size_t plane = static_cast<std::size_t>(alpha.h) * alpha.w;
    T total = T(0);
    for (int bn = 0; bn < alpha.n; ++bn) {
        const T* base = alpha.plane(bn, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            const int label = mask.data[p] ? 1 : 0;
            const T prob = base[label * plane + p];
            total -= std::log(std::max(prob, static_cast<T>(kLogFloor)));
        }
    }
    return total / static_cast<T>(alpha.n * plane);
}

template <typename T>
void attention_loss_backward(const TensorT<T>& alpha, const BinaryMask& mask, T scale,
                             TensorT<T>& alpha_grad) {
    require(!alpha_grad.grad.empty(), "attention_loss_backward: alpha grad not allocated");
    const std::size_t plane = static_cast<std::size_t>(alpha.h) * alpha.w;
    const T norm = scale / static_cast<T>(alpha.n * plane);
    for (int bn = 0; bn < alpha.n; ++bn) {
        const T* base = alpha.plane(bn, 0);
        T* g = alpha_grad.grad.data() + alpha_grad.index(bn, 0, 0, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            const int label = mask.data[p] ? 1 : 0;
            const T prob = std::max(base[label * plane + p], static_cast<T>(kLogFloor));
            g[label * plane + p] -= norm / prob;
        }
    }
}

#define SSTD_INSTANTIATE_ATTENTION(T)                                                              \
    template void init_attention_params<T>(ModelParamsT<T>&, const std::string&, int, int, int,   \
                                           Rng&);                                                  \
    template AttentionTrace<T> compute_attention<T>(const TensorT<T>&, const ModelParamsT<T>&,     \
                                                    const std::string&, int,                       \
                                                    std::span<const AttentionLayerSize>);          \
    template void attention_backward<T>(TensorT<T>&, ModelParamsT<T>&, const std::string&, int,    \
                                        AttentionTrace<T>&);                                       \
    template TensorT<T> encode_attention<T>(const TensorT<T>&, const AttentionMapsT<T>&,           \
                                            const std::string&);                                   \
    template T attention_loss<T>(const TensorT<T>&, const BinaryMask&);                            \
    template void attention_loss_backward<T>(const TensorT<T>&, const BinaryMask&, T,              \
                                             TensorT<T>&);

SSTD_INSTANTIATE_ATTENTION(float)
SSTD_INSTANTIATE_ATTENTION(double)

#undef SSTD_INSTANTIATE_ATTENTION

} // namespace sstd
