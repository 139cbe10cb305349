#include "sstd/inception.hpp"

#include <array>

#include "sstd/init.hpp"
#include "sstd/rng.hpp"

namespace sstd {
namespace {

// Branch conv geometries. Dilation 2 on the 3x3 branch and on both legs of
// the decomposed 5x5 branch; 1x1 convs are undilated.
ConvSpec spec_1x1(int in_ch, int out_ch) { return ConvSpec::simple(in_ch, out_ch, 1, 0); }

ConvSpec spec_3x3_d2(int in_ch, int out_ch) { return ConvSpec::simple(in_ch, out_ch, 3, 2, 2); }

ConvSpec spec_1x5_d2(int in_ch, int out_ch) {
    ConvSpec s;
    s.kh = 1;
    s.kw = 5;
    s.ph = 0;
    s.pw = 4;
    s.dh = 1;
    s.dw = 2;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    return s;
}

ConvSpec spec_5x1_d2(int in_ch, int out_ch) {
    ConvSpec s;
    s.kh = 5;
    s.kw = 1;
    s.ph = 4;
    s.pw = 0;
    s.dh = 2;
    s.dw = 1;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    return s;
}

} // namespace

template <typename T>
void init_inception_params(ModelParamsT<T>& params, const std::string& prefix, int in_channels,
                           int branch_channels, Rng& rng) {
    const auto add_conv = [&](const std::string& name, int out_ch, int in_ch, int kh, int kw) {
        auto& w = params.add(prefix + "." + name + ".w", TensorT<T>(out_ch, in_ch, kh, kw));
        fan_in_uniform_fill(w, in_ch * kh * kw, rng);
        params.add(prefix + "." + name + ".b", TensorT<T>(1, out_ch, 1, 1));
    };
    add_conv("b1x1", branch_channels, in_channels, 1, 1);
    add_conv("b3x3", branch_channels, in_channels, 3, 3);
    add_conv("pool1x1", branch_channels, in_channels, 1, 1);
    add_conv("b1x5", branch_channels, in_channels, 1, 5);
    add_conv("b5x1", branch_channels, branch_channels, 5, 1);
}

template <typename T>
InceptionTrace<T> inception_block(const TensorT<T>& features, const ModelParamsT<T>& params,
                                  const std::string& prefix) {
    const TensorT<T>& w1 = params.at(prefix + ".b1x1.w");
    const int bc = w1.n;
    require(w1.c == features.c, "inception_block: params expect " + std::to_string(w1.c) +
                                    " input channels, features have " + std::to_string(features.c));

    InceptionTrace<T> trace;
    trace.b1 = ops::conv2d(features, w1, params.bias(prefix + ".b1x1.b"),
                           spec_1x1(features.c, bc));
    trace.b3 = ops::conv2d(features, params.at(prefix + ".b3x3.w"),
                           params.bias(prefix + ".b3x3.b"), spec_3x3_d2(features.c, bc));
    trace.pool = ops::maxpool2d_fwd(features, 3, 1, 1);
    trace.bp = ops::conv2d(trace.pool.output, params.at(prefix + ".pool1x1.w"),
                           params.bias(prefix + ".pool1x1.b"), spec_1x1(features.c, bc));
    trace.b15 = ops::conv2d(features, params.at(prefix + ".b1x5.w"),
                            params.bias(prefix + ".b1x5.b"), spec_1x5_d2(features.c, bc));
    trace.b51 = ops::conv2d(trace.b15, params.at(prefix + ".b5x1.w"),
                            params.bias(prefix + ".b5x1.b"), spec_5x1_d2(bc, bc));

    const std::array<const TensorT<T>*, 4> parts = {&trace.b1, &trace.b3, &trace.bp, &trace.b51};
    trace.out = ops::channel_concat<T>(parts);
    trace.out.ensure_grad();
    return trace;
}

template <typename T>
void inception_backward(TensorT<T>& features, ModelParamsT<T>& params, const std::string& prefix,
                        InceptionTrace<T>& trace) {
    const int bc = trace.b1.c;
    trace.b1.ensure_grad();
    trace.b3.ensure_grad();
    trace.bp.ensure_grad();
    trace.b51.ensure_grad();
    const std::array<TensorT<T>*, 4> parts = {&trace.b1, &trace.b3, &trace.bp, &trace.b51};
    ops::channel_concat_backward(trace.out, std::span<TensorT<T>* const>(parts));

    ops::conv2d_backward(features, params.at(prefix + ".b1x1.w"),
                         params.bias_grad(prefix + ".b1x1.b"), spec_1x1(features.c, bc), trace.b1);
    ops::conv2d_backward(features, params.at(prefix + ".b3x3.w"),
                         params.bias_grad(prefix + ".b3x3.b"), spec_3x3_d2(features.c, bc),
                         trace.b3);

    trace.pool.output.ensure_grad();
    ops::conv2d_backward(trace.pool.output, params.at(prefix + ".pool1x1.w"),
                         params.bias_grad(prefix + ".pool1x1.b"), spec_1x1(features.c, bc),
                         trace.bp);
    ops::maxpool2d_backward(trace.pool, features);

    trace.b15.ensure_grad();
    ops::conv2d_backward(trace.b15, params.at(prefix + ".b5x1.w"),
                         params.bias_grad(prefix + ".b5x1.b"), spec_5x1_d2(bc, bc), trace.b51);
    ops::conv2d_backward(features, params.at(prefix + ".b1x5.w"),
                         params.bias_grad(prefix + ".b1x5.b"), spec_1x5_d2(features.c, bc),
                         trace.b15);
}

template <typename T>
void init_aif_params(ModelParamsT<T>& params, const std::string& prefix, int concat_channels,
                     int out_channels, Rng& rng) {
    auto& w = params.add(prefix + ".proj.w", TensorT<T>(out_channels, concat_channels, 1, 1));
    fan_in_uniform_fill(w, concat_channels, rng);
    params.add(prefix + ".proj.b", TensorT<T>(1, out_channels, 1, 1));
}

template <typename T>
AifTrace<T> aggregate_aif(const TensorT<T>* lower, const TensorT<T>& current,
                          const TensorT<T>* higher, const ModelParamsT<T>& params,
                          const std::string& prefix) {
    AifTrace<T> trace;
    std::vector<const TensorT<T>*> parts;
    if (lower) {
        require(lower->h == current.h * 2 && lower->w == current.w * 2,
                "aggregate_aif: lower layer must be 2x the current resolution (lower " +
                    lower->shape_str() + ", current " + current.shape_str() + ")");
        trace.lower_pool = ops::maxpool2d_fwd(*lower, 2, 2, 0);
        parts.push_back(&trace.lower_pool.output);
    }
    parts.push_back(&current);
    if (higher) {
        require(higher->h * 2 == current.h && higher->w * 2 == current.w,
                "aggregate_aif: higher layer must be half the current resolution (higher " +
                    higher->shape_str() + ", current " + current.shape_str() + ")");
        trace.higher_up = ops::bilinear_resize(*higher, current.h, current.w);
        parts.push_back(&trace.higher_up);
    }
    trace.concat = ops::channel_concat<T>(std::span<const TensorT<T>* const>(parts));
    const TensorT<T>& pw = params.at(prefix + ".proj.w");
    require(pw.c == trace.concat.c, "aggregate_aif: projection expects " + std::to_string(pw.c) +
                                        " channels, concat has " + std::to_string(trace.concat.c));
    trace.out = ops::conv2d(trace.concat, pw, params.bias(prefix + ".proj.b"),
                            ConvSpec::simple(trace.concat.c, pw.n, 1, 0));
    trace.out.ensure_grad();
    return trace;
}

template <typename T>
void aif_backward(TensorT<T>* lower, TensorT<T>& current, TensorT<T>* higher,
                  ModelParamsT<T>& params, const std::string& prefix, AifTrace<T>& trace) {
    const TensorT<T>& pw = params.at(prefix + ".proj.w");
    trace.concat.ensure_grad();
    ops::conv2d_backward(trace.concat, params.at(prefix + ".proj.w"),
                         params.bias_grad(prefix + ".proj.b"),
                         ConvSpec::simple(trace.concat.c, pw.n, 1, 0), trace.out);

    std::vector<TensorT<T>*> parts;
    if (lower) {
        trace.lower_pool.output.ensure_grad();
        parts.push_back(&trace.lower_pool.output);
    }
    parts.push_back(&current);
    if (higher) {
        trace.higher_up.ensure_grad();
        parts.push_back(&trace.higher_up);
    }
    ops::channel_concat_backward(trace.concat, std::span<TensorT<T>* const>(parts));

    if (lower) ops::maxpool2d_backward(trace.lower_pool, *lower);
    if (higher) ops::bilinear_resize_backward(*higher, trace.higher_up);
}

#define SSTD_INSTANTIATE_INCEPTION(T)                                                              \
    template void init_inception_params<T>(ModelParamsT<T>&, const std::string&, int, int, Rng&);  \
    template InceptionTrace<T> inception_block<T>(const TensorT<T>&, const ModelParamsT<T>&,       \
                                                  const std::string&);                             \
    template void inception_backward<T>(TensorT<T>&, ModelParamsT<T>&, const std::string&,         \
                                        InceptionTrace<T>&);                                       \
    template void init_aif_params<T>(ModelParamsT<T>&, const std::string&, int, int, Rng&);        \
    template AifTrace<T> aggregate_aif<T>(const TensorT<T>*, const TensorT<T>&, const TensorT<T>*, \
                                          const ModelParamsT<T>&, const std::string&);             \
    template void aif_backward<T>(TensorT<T>*, TensorT<T>&, TensorT<T>*, ModelParamsT<T>&,         \
                                  const std::string&, AifTrace<T>&);

SSTD_INSTANTIATE_INCEPTION(float)
SSTD_INSTANTIATE_INCEPTION(double)

#undef SSTD_INSTANTIATE_INCEPTION

} // namespace sstd
