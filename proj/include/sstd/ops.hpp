#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sstd/tensor.hpp"

// Forward/backward pairs for every dense operation the detector composes.
// Forwards are pure functions of their inputs. Backwards follow one
// convention: the gradient w.r.t. an op's output is read from `output.grad`,
// and gradients are accumulated (+=) into the `.grad` buffers of the value
// tensors passed in — but only where those buffers are allocated
// (ensure_grad()), so callers opt in per tensor.

namespace sstd::ops {

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weights,
                  std::span<const T> bias, const ConvSpec& spec);

template <typename T>
void conv2d_backward(TensorT<T>& input, TensorT<T>& weights, std::span<T> bias_grad,
                     const ConvSpec& spec, const TensorT<T>& output);

/// Stride-`factor` transposed convolution with a 2*factor kernel; output is
/// exactly `factor` times the input extent. Weights are (in_ch, out_ch, k, k).
template <typename T>
TensorT<T> transposed_conv2d(const TensorT<T>& input, const TensorT<T>& weights, int factor);

template <typename T>
void transposed_conv2d_backward(TensorT<T>& input, TensorT<T>& weights, int factor,
                                const TensorT<T>& output);

/// Per-channel bilinear interpolation weights for transposed_conv2d; with
/// these a constant input upsamples to the same constant in the interior.
template <typename T>
TensorT<T> bilinear_deconv_weights(int channels, int factor);

template <typename T>
struct MaxPoolResult {
    TensorT<T> output;
    std::vector<std::int64_t> argmax; // flat input index per output element
};

/// Max over each window; padding cells are ignored (never win), so a constant
/// input pools to the same constant. Ties go to the first element in row-major
/// window order.
template <typename T>
MaxPoolResult<T> maxpool2d_fwd(const TensorT<T>& input, int kernel, int stride, int pad);

template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& input, int kernel, int stride, int pad);

// Routes fwd.output.grad back to the argmax positions.
template <typename T>
void maxpool2d_backward(const MaxPoolResult<T>& fwd, TensorT<T>& input);

template <typename T>
TensorT<T> channel_concat(std::span<const TensorT<T>* const> inputs);

template <typename T>
void channel_concat_backward(const TensorT<T>& output, std::span<TensorT<T>* const> inputs);

/// Softmax across channels, independently per (batch, y, x); max-subtracted.
template <typename T>
TensorT<T> channel_softmax(const TensorT<T>& input);

// `output` carries both the softmax values (data) and its incoming grad.
template <typename T>
void channel_softmax_backward(const TensorT<T>& output, TensorT<T>& input);

/// features (n,C,h,w) scaled pointwise by a one-channel map (n,1,h,w).
template <typename T>
TensorT<T> elementwise_scale(const TensorT<T>& features, const TensorT<T>& map);

template <typename T>
void elementwise_scale_backward(TensorT<T>& features, TensorT<T>& map, const TensorT<T>& output);

// sum_i f(pred_i - target_i), f quadratic below unit error, linear above
template <typename T>
T smooth_l1(std::span<const T> pred, std::span<const T> target);

template <typename T>
void smooth_l1_backward(std::span<const T> pred, std::span<const T> target, T out_grad,
                        std::span<T> pred_grad);

/// Mean negative log-likelihood over all positions whose label is not
/// ignore_label. labels are row-major (n, y, x); each value must be a valid
/// channel index or ignore_label.
template <typename T>
T softmax_cross_entropy(const TensorT<T>& logits, const std::vector<int>& labels,
                        int ignore_label);

template <typename T>
void softmax_cross_entropy_backward(TensorT<T>& logits, const std::vector<int>& labels,
                                    int ignore_label, T out_grad);

/// Bilinear resize to (out_h, out_w) with half-pixel centre alignment.
template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& input, int out_h, int out_w);

template <typename T>
void bilinear_resize_backward(TensorT<T>& input, const TensorT<T>& output);

} // namespace sstd::ops
