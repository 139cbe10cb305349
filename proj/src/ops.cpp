#include "sstd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sstd/kernels.hpp"

namespace sstd::ops {
namespace {

template <typename T>
void check_conv_args(const TensorT<T>& input, const TensorT<T>& weights,
                     std::span<const T> bias, const ConvSpec& spec) {
    spec.validate();
    require(input.c == spec.in_channels,
            "conv2d: input has " + std::to_string(input.c) + " channels, spec expects " +
                std::to_string(spec.in_channels));
    require(weights.n == spec.out_channels && weights.c == spec.in_channels &&
                weights.h == spec.kh && weights.w == spec.kw,
            "conv2d: weight shape " + weights.shape_str() + " does not match spec (" +
                std::to_string(spec.out_channels) + "x" + std::to_string(spec.in_channels) + "x" +
                std::to_string(spec.kh) + "x" + std::to_string(spec.kw) + ")");
    require(bias.size() == static_cast<std::size_t>(spec.out_channels),
            "conv2d: bias length " + std::to_string(bias.size()) + " != out_channels " +
                std::to_string(spec.out_channels));
    require(spec.out_h(input.h) >= 1 && spec.out_w(input.w) >= 1,
            "conv2d: zero-size output for input " + input.shape_str());
}

template <typename T>
void check_out_grad(const TensorT<T>& output, const char* who) {
    require(!output.grad.empty(), std::string(who) + ": output.grad not set");
}

} // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weights,
                  std::span<const T> bias, const ConvSpec& spec) {
    check_conv_args(input, weights, bias, spec);
    const int ho = spec.out_h(input.h), wo = spec.out_w(input.w);
    TensorT<T> out(input.n, spec.out_channels, ho, wo);

    for (int bn = 0; bn < input.n; ++bn) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            T* out_plane = out.plane(bn, oc);
            std::fill(out_plane, out_plane + static_cast<std::size_t>(ho) * wo, bias[oc]);
            for (int ic = 0; ic < spec.in_channels; ++ic) {
                const T* in_plane = input.plane(bn, ic);
                for (int ky = 0; ky < spec.kh; ++ky) {
                    for (int kx = 0; kx < spec.kw; ++kx) {
                        const T wv = weights.at(oc, ic, ky, kx);
                        if (wv == T(0)) continue;
                        const int x_off = kx * spec.dw - spec.pw;
                        for (int oy = 0; oy < ho; ++oy) {
                            const int iy = oy * spec.sh - spec.ph + ky * spec.dh;
                            if (iy < 0 || iy >= input.h) continue;
                            T* out_row = out_plane + static_cast<std::size_t>(oy) * wo;
                            const T* in_row = in_plane + static_cast<std::size_t>(iy) * input.w;
                            if (spec.sw == 1) {
                                const int lo = std::max(0, -x_off);
                                const int hi = std::min(wo - 1, input.w - 1 - x_off);
                                if (hi >= lo)
                                    kern::axpy<T>(static_cast<std::size_t>(hi - lo + 1), wv,
                                                  in_row + lo + x_off, out_row + lo);
                            } else {
                                for (int ox = 0; ox < wo; ++ox) {
                                    const int ix = ox * spec.sw + x_off;
                                    if (ix >= 0 && ix < input.w) out_row[ox] += wv * in_row[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
void conv2d_backward(TensorT<T>& input, TensorT<T>& weights, std::span<T> bias_grad,
                     const ConvSpec& spec, const TensorT<T>& output) {
    check_out_grad(output, "conv2d_backward");
    const int ho = spec.out_h(input.h), wo = spec.out_w(input.w);
    require(output.n == input.n && output.c == spec.out_channels && output.h == ho &&
                output.w == wo,
            "conv2d_backward: output shape " + output.shape_str() + " mismatch");
    const bool want_input = !input.grad.empty();
    const bool want_weight = !weights.grad.empty();

    if (!bias_grad.empty()) {
        for (int bn = 0; bn < input.n; ++bn)
            for (int oc = 0; oc < spec.out_channels; ++oc) {
                const T* g = output.grad.data() + output.index(bn, oc, 0, 0);
                T acc = T(0);
                for (std::size_t i = 0; i < static_cast<std::size_t>(ho) * wo; ++i) acc += g[i];
                bias_grad[oc] += acc;
            }
    }
    if (!want_input && !want_weight) return;

    for (int bn = 0; bn < input.n; ++bn) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            const T* og_plane = output.grad.data() + output.index(bn, oc, 0, 0);
            for (int ic = 0; ic < spec.in_channels; ++ic) {
                const T* in_plane = input.plane(bn, ic);
                T* ig_plane = want_input ? input.grad.data() + input.index(bn, ic, 0, 0) : nullptr;
                for (int ky = 0; ky < spec.kh; ++ky) {
                    for (int kx = 0; kx < spec.kw; ++kx) {
                        const T wv = weights.at(oc, ic, ky, kx);
                        T wg = T(0);
                        const int x_off = kx * spec.dw - spec.pw;
                        for (int oy = 0; oy < ho; ++oy) {
                            const int iy = oy * spec.sh - spec.ph + ky * spec.dh;
                            if (iy < 0 || iy >= input.h) continue;
                            const T* og_row = og_plane + static_cast<std::size_t>(oy) * wo;
                            const std::size_t in_row = static_cast<std::size_t>(iy) * input.w;
                            if (spec.sw == 1) {
                                const int lo = std::max(0, -x_off);
                                const int hi = std::min(wo - 1, input.w - 1 - x_off);
                                if (hi < lo) continue;
                                const std::size_t len = static_cast<std::size_t>(hi - lo + 1);
                                if (ig_plane)
                                    kern::axpy<T>(len, wv, og_row + lo,
                                                  ig_plane + in_row + lo + x_off);
                                if (want_weight)
                                    wg += kern::dot<T>(len, og_row + lo,
                                                       in_plane + in_row + lo + x_off);
                            } else {
                                for (int ox = 0; ox < wo; ++ox) {
                                    const int ix = ox * spec.sw + x_off;
                                    if (ix < 0 || ix >= input.w) continue;
                                    if (ig_plane) ig_plane[in_row + ix] += wv * og_row[ox];
                                    if (want_weight) wg += og_row[ox] * in_plane[in_row + ix];
                                }
                            }
                        }
                        if (want_weight) weights.grad[weights.index(oc, ic, ky, kx)] += wg;
                    }
                }
            }
        }
    }
}

template <typename T>
TensorT<T> transposed_conv2d(const TensorT<T>& input, const TensorT<T>& weights, int factor) {
    require(factor >= 1, "transposed_conv2d: factor must be >= 1, got " + std::to_string(factor));
    const int k = 2 * factor;
    require(weights.n == input.c, "transposed_conv2d: weights expect " + std::to_string(weights.n) +
                                      " input channels, input has " + std::to_string(input.c));
    require(weights.h == k && weights.w == k,
            "transposed_conv2d: kernel must be 2*factor = " + std::to_string(k) + ", weights are " +
                weights.shape_str());
    // pad_left + pad_right = factor makes the output exactly factor * input
    const int pl = factor / 2;
    const int cout = weights.c;
    const int ho = input.h * factor, wo = input.w * factor;
    TensorT<T> out(input.n, cout, ho, wo);

    for (int bn = 0; bn < input.n; ++bn) {
        for (int ci = 0; ci < input.c; ++ci) {
            const T* in_plane = input.plane(bn, ci);
            for (int iy = 0; iy < input.h; ++iy) {
                for (int ix = 0; ix < input.w; ++ix) {
                    const T v = in_plane[static_cast<std::size_t>(iy) * input.w + ix];
                    if (v == T(0)) continue;
                    const int ybase = iy * factor - pl;
                    const int xbase = ix * factor - pl;
                    const int lo = std::max(0, -xbase);
                    const int hi = std::min(k - 1, wo - 1 - xbase);
                    if (hi < lo) continue;
                    for (int co = 0; co < cout; ++co) {
                        T* out_plane = out.plane(bn, co);
                        for (int ky = 0; ky < k; ++ky) {
                            const int oy = ybase + ky;
                            if (oy < 0 || oy >= ho) continue;
                            kern::axpy<T>(static_cast<std::size_t>(hi - lo + 1), v,
                                          &weights.at(ci, co, ky, lo),
                                          out_plane + static_cast<std::size_t>(oy) * wo + xbase + lo);
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
void transposed_conv2d_backward(TensorT<T>& input, TensorT<T>& weights, int factor,
                                const TensorT<T>& output) {
    check_out_grad(output, "transposed_conv2d_backward");
    const int k = 2 * factor;
    const int pl = factor / 2;
    const int cout = weights.c;
    const int ho = input.h * factor, wo = input.w * factor;
    require(output.n == input.n && output.c == cout && output.h == ho && output.w == wo,
            "transposed_conv2d_backward: output shape " + output.shape_str() + " mismatch");
    const bool want_input = !input.grad.empty();
    const bool want_weight = !weights.grad.empty();
    if (!want_input && !want_weight) return;

    for (int bn = 0; bn < input.n; ++bn) {
        for (int ci = 0; ci < input.c; ++ci) {
            const T* in_plane = input.plane(bn, ci);
            for (int iy = 0; iy < input.h; ++iy) {
                for (int ix = 0; ix < input.w; ++ix) {
                    const std::size_t in_idx = static_cast<std::size_t>(iy) * input.w + ix;
                    const int ybase = iy * factor - pl;
                    const int xbase = ix * factor - pl;
                    const int lo = std::max(0, -xbase);
                    const int hi = std::min(k - 1, wo - 1 - xbase);
                    if (hi < lo) continue;
                    const std::size_t len = static_cast<std::size_t>(hi - lo + 1);
                    T gin = T(0);
                    for (int co = 0; co < cout; ++co) {
                        const T* og_plane = output.grad.data() + output.index(bn, co, 0, 0);
                        for (int ky = 0; ky < k; ++ky) {
                            const int oy = ybase + ky;
                            if (oy < 0 || oy >= ho) continue;
                            const T* og_seg =
                                og_plane + static_cast<std::size_t>(oy) * wo + xbase + lo;
                            if (want_input)
                                gin += kern::dot<T>(len, &weights.at(ci, co, ky, lo), og_seg);
                            if (want_weight) {
                                const T v = in_plane[in_idx];
                                if (v != T(0))
                                    kern::axpy<T>(len, v, og_seg,
                                                  weights.grad.data() +
                                                      weights.index(ci, co, ky, lo));
                            }
                        }
                    }
                    if (want_input) input.grad[input.index(bn, ci, iy, ix)] += gin;
                }
            }
        }
    }
}

template <typename T>
TensorT<T> bilinear_deconv_weights(int channels, int factor) {
    require(channels >= 1 && factor >= 1, "bilinear_deconv_weights: bad arguments");
    const int k = 2 * factor;
    TensorT<T> w(channels, channels, k, k);
    const double centre = factor - 0.5;
    for (int i = 0; i < channels; ++i)
        for (int y = 0; y < k; ++y)
            for (int x = 0; x < k; ++x) {
                const double fy = 1.0 - std::abs(y - centre) / factor;
                const double fx = 1.0 - std::abs(x - centre) / factor;
                w.at(i, i, y, x) = static_cast<T>(fy * fx);
            }
    return w;
}

template <typename T>
MaxPoolResult<T> maxpool2d_fwd(const TensorT<T>& input, int kernel, int stride, int pad) {
    require(kernel >= 1, "maxpool2d: kernel must be >= 1");
    require(stride >= 1, "maxpool2d: stride must be >= 1");
    require(pad >= 0, "maxpool2d: pad must be >= 0");
    require(pad < kernel, "maxpool2d: window entirely in padding (pad " + std::to_string(pad) +
                              " >= kernel " + std::to_string(kernel) + ")");
    const int ho = (input.h + 2 * pad - kernel) / stride + 1;
    const int wo = (input.w + 2 * pad - kernel) / stride + 1;
    require(ho >= 1 && wo >= 1, "maxpool2d: zero-size output for input " + input.shape_str());

    MaxPoolResult<T> res;
    res.output = TensorT<T>(input.n, input.c, ho, wo);
    res.argmax.assign(res.output.size(), -1);

    std::size_t out_idx = 0;
    for (int bn = 0; bn < input.n; ++bn) {
        for (int ic = 0; ic < input.c; ++ic) {
            const T* in_plane = input.plane(bn, ic);
            const std::size_t plane_base = input.index(bn, ic, 0, 0);
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox, ++out_idx) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::int64_t best_idx = -1;
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= input.h) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= input.w) continue;
                            const T v = in_plane[static_cast<std::size_t>(iy) * input.w + ix];
                            if (v > best) {
                                best = v;
                                best_idx = static_cast<std::int64_t>(plane_base) +
                                           static_cast<std::int64_t>(iy) * input.w + ix;
                            }
                        }
                    }
                    res.output.data[out_idx] = best;
                    res.argmax[out_idx] = best_idx;
                }
            }
        }
    }
    return res;
}

template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& input, int kernel, int stride, int pad) {
    return maxpool2d_fwd(input, kernel, stride, pad).output;
}

template <typename T>
void maxpool2d_backward(const MaxPoolResult<T>& fwd, TensorT<T>& input) {
    check_out_grad(fwd.output, "maxpool2d_backward");
    if (input.grad.empty()) return;
    for (std::size_t i = 0; i < fwd.argmax.size(); ++i) {
        const std::int64_t src = fwd.argmax[i];
        if (src >= 0) input.grad[static_cast<std::size_t>(src)] += fwd.output.grad[i];
    }
}

template <typename T>
TensorT<T> channel_concat(std::span<const TensorT<T>* const> inputs) {
    require(!inputs.empty(), "channel_concat: no inputs");
    const TensorT<T>& first = *inputs[0];
    int total_c = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const TensorT<T>& t = *inputs[i];
        require(t.n == first.n && t.h == first.h && t.w == first.w,
                "channel_concat: input " + std::to_string(i) + " has shape " + t.shape_str() +
                    ", expected batch/spatial of " + first.shape_str());
        total_c += t.c;
    }
    TensorT<T> out(first.n, total_c, first.h, first.w);
    for (int bn = 0; bn < first.n; ++bn) {
        int oc = 0;
        for (const TensorT<T>* t : inputs) {
            for (int ic = 0; ic < t->c; ++ic, ++oc) {
                const T* src = t->plane(bn, ic);
                std::copy(src, src + static_cast<std::size_t>(first.h) * first.w,
                          out.plane(bn, oc));
            }
        }
    }
    return out;
}

template <typename T>
void channel_concat_backward(const TensorT<T>& output, std::span<TensorT<T>* const> inputs) {
    check_out_grad(output, "channel_concat_backward");
    const std::size_t plane = static_cast<std::size_t>(output.h) * output.w;
    for (int bn = 0; bn < output.n; ++bn) {
        int oc = 0;
        for (TensorT<T>* t : inputs) {
            for (int ic = 0; ic < t->c; ++ic, ++oc) {
                if (t->grad.empty()) continue;
                const T* src = output.grad.data() + output.index(bn, oc, 0, 0);
                T* dst = t->grad.data() + t->index(bn, ic, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
            }
        }
        require(oc == output.c, "channel_concat_backward: channel partition mismatch");
    }
}

template <typename T>
TensorT<T> channel_softmax(const TensorT<T>& input) {
    require(input.c >= 2, "channel_softmax: needs >= 2 channels, got " + std::to_string(input.c));
    TensorT<T> out(input.n, input.c, input.h, input.w);
    const std::size_t plane = static_cast<std::size_t>(input.h) * input.w;
    for (int bn = 0; bn < input.n; ++bn) {
        const T* in_base = input.plane(bn, 0);
        T* out_base = out.plane(bn, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            T m = in_base[p];
            for (int ic = 1; ic < input.c; ++ic) m = std::max(m, in_base[ic * plane + p]);
            T sum = T(0);
            for (int ic = 0; ic < input.c; ++ic) {
                const T e = std::exp(in_base[ic * plane + p] - m);
                out_base[ic * plane + p] = e;
                sum += e;
            }
            const T inv = T(1) / sum;
            for (int ic = 0; ic < input.c; ++ic) out_base[ic * plane + p] *= inv;
        }
    }
    return out;
}

template <typename T>
void channel_softmax_backward(const TensorT<T>& output, TensorT<T>& input) {
    check_out_grad(output, "channel_softmax_backward");
    if (input.grad.empty()) return;
    require(output.same_shape(input), "channel_softmax_backward: shape mismatch");
    const std::size_t plane = static_cast<std::size_t>(output.h) * output.w;
    for (int bn = 0; bn < output.n; ++bn) {
        const T* y = output.plane(bn, 0);
        const T* dy = output.grad.data() + output.index(bn, 0, 0, 0);
        T* dx = input.grad.data() + input.index(bn, 0, 0, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            T dot = T(0);
            for (int ic = 0; ic < output.c; ++ic) dot += y[ic * plane + p] * dy[ic * plane + p];
            for (int ic = 0; ic < output.c; ++ic)
                dx[ic * plane + p] += y[ic * plane + p] * (dy[ic * plane + p] - dot);
        }
    }
}

template <typename T>
TensorT<T> elementwise_scale(const TensorT<T>& features, const TensorT<T>& map) {
    require(map.c == 1, "elementwise_scale: map must have 1 channel, got " + std::to_string(map.c));
    require(map.n == features.n && map.h == features.h && map.w == features.w,
            "elementwise_scale: map " + map.shape_str() + " does not match features " +
                features.shape_str());
    TensorT<T> out(features.n, features.c, features.h, features.w);
    const std::size_t plane = static_cast<std::size_t>(features.h) * features.w;
    for (int bn = 0; bn < features.n; ++bn) {
        const T* m = map.plane(bn, 0);
        for (int ic = 0; ic < features.c; ++ic)
            kern::mul<T>(plane, features.plane(bn, ic), m, out.plane(bn, ic));
    }
    return out;
}

template <typename T>
void elementwise_scale_backward(TensorT<T>& features, TensorT<T>& map, const TensorT<T>& output) {
    check_out_grad(output, "elementwise_scale_backward");
    const std::size_t plane = static_cast<std::size_t>(features.h) * features.w;
    for (int bn = 0; bn < features.n; ++bn) {
        const T* m = map.plane(bn, 0);
        for (int ic = 0; ic < features.c; ++ic) {
            const T* og = output.grad.data() + output.index(bn, ic, 0, 0);
            if (!features.grad.empty())
                kern::mul_acc<T>(plane, og, m, features.grad.data() + features.index(bn, ic, 0, 0));
            if (!map.grad.empty())
                kern::mul_acc<T>(plane, og, features.plane(bn, ic),
                                 map.grad.data() + map.index(bn, 0, 0, 0));
        }
    }
}

template <typename T>
T smooth_l1(std::span<const T> pred, std::span<const T> target) {
    require(pred.size() == target.size(), "smooth_l1: length mismatch (" +
                                              std::to_string(pred.size()) + " vs " +
                                              std::to_string(target.size()) + ")");
    T total = T(0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T x = pred[i] - target[i];
        const T ax = std::abs(x);
        total += ax < T(1) ? T(0.5) * x * x : ax - T(0.5);
    }
    return total;
}

template <typename T>
void smooth_l1_backward(std::span<const T> pred, std::span<const T> target, T out_grad,
                        std::span<T> pred_grad) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T x = pred[i] - target[i];
        const T d = std::abs(x) < T(1) ? x : (x > T(0) ? T(1) : T(-1));
        pred_grad[i] += out_grad * d;
    }
}

namespace {

template <typename T>
std::size_t check_xent_args(const TensorT<T>& logits, const std::vector<int>& labels,
                            int ignore_label) {
    const std::size_t positions = static_cast<std::size_t>(logits.n) * logits.h * logits.w;
    require(labels.size() == positions,
            "softmax_cross_entropy: labels size " + std::to_string(labels.size()) +
                " != positions " + std::to_string(positions));
    std::size_t active = 0;
    for (int v : labels) {
        if (v == ignore_label) continue;
        require(v >= 0 && v < logits.c,
                "softmax_cross_entropy: label " + std::to_string(v) + " out of range [0, " +
                    std::to_string(logits.c) + ")");
        ++active;
    }
    return active;
}

} // namespace

template <typename T>
T softmax_cross_entropy(const TensorT<T>& logits, const std::vector<int>& labels,
                        int ignore_label) {
    const std::size_t active = check_xent_args(logits, labels, ignore_label);
    if (active == 0) return T(0);
    const std::size_t plane = static_cast<std::size_t>(logits.h) * logits.w;
    T total = T(0);
    for (int bn = 0; bn < logits.n; ++bn) {
        const T* base = logits.plane(bn, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            const int label = labels[bn * plane + p];
            if (label == ignore_label) continue;
            T m = base[p];
            for (int ic = 1; ic < logits.c; ++ic) m = std::max(m, base[ic * plane + p]);
            T sum = T(0);
            for (int ic = 0; ic < logits.c; ++ic) sum += std::exp(base[ic * plane + p] - m);
            total += std::log(sum) - (base[label * plane + p] - m);
        }
    }
    return total / static_cast<T>(active);
}

template <typename T>
void softmax_cross_entropy_backward(TensorT<T>& logits, const std::vector<int>& labels,
                                    int ignore_label, T out_grad) {
    const std::size_t active = check_xent_args(logits, labels, ignore_label);
    if (active == 0 || logits.grad.empty()) return;
    const T scale = out_grad / static_cast<T>(active);
    const std::size_t plane = static_cast<std::size_t>(logits.h) * logits.w;
    for (int bn = 0; bn < logits.n; ++bn) {
        const T* base = logits.plane(bn, 0);
        T* gbase = logits.grad.data() + logits.index(bn, 0, 0, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            const int label = labels[bn * plane + p];
            if (label == ignore_label) continue;
            T m = base[p];
            for (int ic = 1; ic < logits.c; ++ic) m = std::max(m, base[ic * plane + p]);
            T sum = T(0);
            for (int ic = 0; ic < logits.c; ++ic) sum += std::exp(base[ic * plane + p] - m);
            for (int ic = 0; ic < logits.c; ++ic) {
                const T prob = std::exp(base[ic * plane + p] - m) / sum;
                gbase[ic * plane + p] += scale * (prob - (ic == label ? T(1) : T(0)));
            }
        }
    }
}

template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& input, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, "bilinear_resize: output dims must be >= 1");
    TensorT<T> out(input.n, input.c, out_h, out_w);
    const double ry = static_cast<double>(input.h) / out_h;
    const double rx = static_cast<double>(input.w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double sy = (oy + 0.5) * ry - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, input.h - 1);
        const int y1 = std::min(y0 + 1, input.h - 1);
        const T fy = static_cast<T>(std::clamp(sy, 0.0, double(input.h - 1)) - y0);
        for (int ox = 0; ox < out_w; ++ox) {
            const double sx = (ox + 0.5) * rx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, input.w - 1);
            const int x1 = std::min(x0 + 1, input.w - 1);
            const T fx = static_cast<T>(std::clamp(sx, 0.0, double(input.w - 1)) - x0);
            for (int bn = 0; bn < input.n; ++bn)
                for (int ic = 0; ic < input.c; ++ic) {
                    const T* p = input.plane(bn, ic);
                    const T v =
                        (T(1) - fy) * ((T(1) - fx) * p[y0 * input.w + x0] +
                                       fx * p[y0 * input.w + x1]) +
                        fy * ((T(1) - fx) * p[y1 * input.w + x0] + fx * p[y1 * input.w + x1]);
                    out.at(bn, ic, oy, ox) = v;
                }
        }
    }
    return out;
}

template <typename T>
void bilinear_resize_backward(TensorT<T>& input, const TensorT<T>& output) {
    check_out_grad(output, "bilinear_resize_backward");
    if (input.grad.empty()) return;
    require(output.n == input.n && output.c == input.c,
            "bilinear_resize_backward: batch/channel mismatch");
    const int out_h = output.h, out_w = output.w;
    const double ry = static_cast<double>(input.h) / out_h;
    const double rx = static_cast<double>(input.w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double sy = (oy + 0.5) * ry - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, input.h - 1);
        const int y1 = std::min(y0 + 1, input.h - 1);
        const T fy = static_cast<T>(std::clamp(sy, 0.0, double(input.h - 1)) - y0);
        for (int ox = 0; ox < out_w; ++ox) {
            const double sx = (ox + 0.5) * rx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, input.w - 1);
            const int x1 = std::min(x0 + 1, input.w - 1);
            const T fx = static_cast<T>(std::clamp(sx, 0.0, double(input.w - 1)) - x0);
            for (int bn = 0; bn < input.n; ++bn)
                for (int ic = 0; ic < input.c; ++ic) {
                    const T g = output.grad[output.index(bn, ic, oy, ox)];
                    T* p = input.grad.data() + input.index(bn, ic, 0, 0);
                    p[y0 * input.w + x0] += (T(1) - fy) * (T(1) - fx) * g;
                    p[y0 * input.w + x1] += (T(1) - fy) * fx * g;
                    p[y1 * input.w + x0] += fy * (T(1) - fx) * g;
                    p[y1 * input.w + x1] += fy * fx * g;
                }
        }
    }
}

#define SSTD_INSTANTIATE_OPS(T)                                                                    \
    template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, std::span<const T>,        \
                                  const ConvSpec&);                                                \
    template void conv2d_backward<T>(TensorT<T>&, TensorT<T>&, std::span<T>, const ConvSpec&,      \
                                     const TensorT<T>&);                                           \
    template TensorT<T> transposed_conv2d<T>(const TensorT<T>&, const TensorT<T>&, int);           \
    template void transposed_conv2d_backward<T>(TensorT<T>&, TensorT<T>&, int, const TensorT<T>&); \
    template TensorT<T> bilinear_deconv_weights<T>(int, int);                                      \
    template MaxPoolResult<T> maxpool2d_fwd<T>(const TensorT<T>&, int, int, int);                  \
    template TensorT<T> maxpool2d<T>(const TensorT<T>&, int, int, int);                            \
    template void maxpool2d_backward<T>(const MaxPoolResult<T>&, TensorT<T>&);                     \
    template TensorT<T> channel_concat<T>(std::span<const TensorT<T>* const>);                     \
    template void channel_concat_backward<T>(const TensorT<T>&, std::span<TensorT<T>* const>);     \
    template TensorT<T> channel_softmax<T>(const TensorT<T>&);                                     \
    template void channel_softmax_backward<T>(const TensorT<T>&, TensorT<T>&);                     \
    template TensorT<T> elementwise_scale<T>(const TensorT<T>&, const TensorT<T>&);                \
    template void elementwise_scale_backward<T>(TensorT<T>&, TensorT<T>&, const TensorT<T>&);      \
    template T smooth_l1<T>(std::span<const T>, std::span<const T>);                               \
    template void smooth_l1_backward<T>(std::span<const T>, std::span<const T>, T, std::span<T>);  \
    template T softmax_cross_entropy<T>(const TensorT<T>&, const std::vector<int>&, int);          \
    template void softmax_cross_entropy_backward<T>(TensorT<T>&, const std::vector<int>&, int, T); \
    template TensorT<T> bilinear_resize<T>(const TensorT<T>&, int, int);                           \
    template void bilinear_resize_backward<T>(TensorT<T>&, const TensorT<T>&);

SSTD_INSTANTIATE_OPS(float)
SSTD_INSTANTIATE_OPS(double)

#undef SSTD_INSTANTIATE_OPS

} // namespace sstd::ops
