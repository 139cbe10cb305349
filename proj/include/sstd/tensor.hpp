#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "sstd/error.hpp"

namespace sstd {

/// Dense 4-D feature map (batch, channels, rows, cols), row-major within
/// (c, h, w). The optional grad buffer mirrors data element-for-element and is
/// allocated on demand via ensure_grad().
template <typename T>
struct TensorT {
    int n = 1, c = 1, h = 1, w = 1;
    std::vector<T> data;
    std::vector<T> grad;

    TensorT() : data(1, T(0)) {}

    TensorT(int n_, int c_, int h_, int w_, T fill = T(0)) : n(n_), c(c_), h(h_), w(w_) {
        require(n >= 1 && c >= 1 && h >= 1 && w >= 1,
                "tensor dims must all be >= 1, got " + shape_str());
        data.assign(size(), fill);
    }

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }

    T& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    const T& at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    // Contiguous (h*w) slice for one (batch, channel) pair.
    T* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const T* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }
    T* grad_plane(int in, int ic) { return grad.data() + index(in, ic, 0, 0); }

    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

/// Convolution geometry. Output extent follows
///   H_out = floor((H + 2*ph - dh*(kh-1) - 1) / sh) + 1
/// and likewise for width.
struct ConvSpec {
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    int ph = 0, pw = 0;
    int dh = 1, dw = 1;
    int in_channels = 1;
    int out_channels = 1;

    static ConvSpec simple(int in_ch, int out_ch, int kernel, int pad, int dilation = 1) {
        ConvSpec s;
        s.kh = s.kw = kernel;
        s.ph = s.pw = pad;
        s.dh = s.dw = dilation;
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        return s;
    }

    void validate() const {
        require(kh >= 1 && kw >= 1, "conv kernel must be >= 1");
        require(sh >= 1 && sw >= 1, "conv stride must be >= 1");
        require(dh >= 1 && dw >= 1, "conv dilation must be >= 1");
        require(ph >= 0 && pw >= 0, "conv padding must be >= 0");
        require(in_channels >= 1 && out_channels >= 1, "conv channel counts must be >= 1");
    }

    int out_h(int in_h) const { return (in_h + 2 * ph - dh * (kh - 1) - 1) / sh + 1; }
    int out_w(int in_w) const { return (in_w + 2 * pw - dw * (kw - 1) - 1) / sw + 1; }
};

} // namespace sstd
