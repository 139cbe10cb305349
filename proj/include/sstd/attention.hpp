#pragma once

#include <map>
#include <span>
#include <string>

#include "sstd/mask.hpp"
#include "sstd/params.hpp"
#include "sstd/tensor.hpp"

namespace sstd {

/// Pixel-wise text attention. `alpha` is the 2-channel softmax map at input
/// resolution (channel 1 = text); `alpha_pos` is that channel alone; `resized`
/// holds the per-prediction-layer downsampled copies used for feature gating.
template <typename T>
struct AttentionMapsT {
    TensorT<T> alpha;
    TensorT<T> alpha_pos;
    std::map<std::string, TensorT<T>> resized;
};

using AttentionMaps = AttentionMapsT<float>;

template <typename T>
struct AttentionTrace {
    TensorT<T> h1, h2;  // the two 3x3 conv outputs
    TensorT<T> up;      // transposed-conv output at input resolution
    TensorT<T> logits;  // 2-channel projection
    AttentionMapsT<T> maps;
};

struct AttentionLayerSize {
    std::string name;
    int h = 0, w = 0;
};

/// Parameter names under `prefix`: conv1.w/.b, conv2.w/.b, deconv.w, proj.w/.b.
/// Builds fresh tensors in `params`; the deconv starts as bilinear
/// interpolation and the 2-channel projection starts at zero so the initial
/// attention map is exactly 0.5 everywhere.
template <typename T>
void init_attention_params(ModelParamsT<T>& params, const std::string& prefix, int in_channels,
                           int width, int factor, class Rng& rng);

/// Two 3x3 convs (pad 1), x`factor` transposed-conv upsampling, 1x1 projection
/// to 2 channels, channel softmax. `f_aif1` must sit at input_resolution /
/// factor; resized positive maps are produced for each entry of layer_sizes.
template <typename T>
AttentionTrace<T> compute_attention(const TensorT<T>& f_aif1, const ModelParamsT<T>& params,
                                    const std::string& prefix, int factor,
                                    std::span<const AttentionLayerSize> layer_sizes);

/// Consumes grads accumulated in trace.maps.alpha.grad and
/// trace.maps.resized[*].grad, accumulating parameter grads and, when
/// f_aif1.grad is allocated, the gradient w.r.t. f_aif1.
template <typename T>
void attention_backward(TensorT<T>& f_aif1, ModelParamsT<T>& params, const std::string& prefix,
                        int factor, AttentionTrace<T>& trace);

/// features gated by the layer's resized positive attention map.
template <typename T>
TensorT<T> encode_attention(const TensorT<T>& features, const AttentionMapsT<T>& maps,
                            const std::string& layer_name);

/// Mean pixel-wise cross-entropy between the 2-channel softmax map and a
/// binary text mask.
template <typename T>
T attention_loss(const TensorT<T>& alpha, const BinaryMask& mask);

/// Accumulates d(loss)/d(alpha), scaled by `scale`, into alpha_grad.
template <typename T>
void attention_loss_backward(const TensorT<T>& alpha, const BinaryMask& mask, T scale,
                             TensorT<T>& alpha_grad);

} // namespace sstd
