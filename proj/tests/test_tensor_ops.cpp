#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "sstd/gradcheck.hpp"
#include "sstd/ops.hpp"
#include "sstd/rng.hpp"

using namespace sstd;

namespace {

template <typename T>
TensorT<T> filled(int n, int c, int h, int w, T v) {
    return TensorT<T>(n, c, h, w, v);
}

template <typename T>
TensorT<T> random_tensor(int n, int c, int h, int w, Rng& rng) {
    TensorT<T> t(n, c, h, w);
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-1.0, 1.0));
    return t;
}

} // namespace

TEST_CASE("conv2d window sums on an all-ones 3x3 input") {
    Tensor input = filled<float>(1, 1, 3, 3, 1.0f);
    Tensor weights = filled<float>(1, 1, 3, 3, 1.0f);
    std::array<float, 1> bias = {0.0f};
    auto out = ops::conv2d(input, weights, std::span<const float>(bias), ConvSpec::simple(1, 1, 3, 1));
    REQUIRE(out.h == 3);
    REQUIRE(out.w == 3);
    CHECK(out.at(0, 0, 1, 1) == 9.0f); // full window
    CHECK(out.at(0, 0, 0, 0) == 4.0f); // corner sees a 2x2 slice
    CHECK(out.at(0, 0, 0, 2) == 4.0f);
    CHECK(out.at(0, 0, 2, 0) == 4.0f);
    CHECK(out.at(0, 0, 2, 2) == 4.0f);
    CHECK(out.at(0, 0, 0, 1) == 6.0f);
}

TEST_CASE("size-preserving dilated conv: H=64, k=3, d=2, p=2, s=1") {
    ConvSpec spec = ConvSpec::simple(1, 1, 3, 2, 2);
    CHECK(spec.out_h(64) == 64);
    CHECK(spec.out_w(64) == 64);
}

TEST_CASE("conv output size formula holds over random legal specs") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        ConvSpec spec;
        spec.kh = static_cast<int>(rng.uniform_int(1, 5));
        spec.kw = static_cast<int>(rng.uniform_int(1, 5));
        spec.sh = static_cast<int>(rng.uniform_int(1, 3));
        spec.sw = static_cast<int>(rng.uniform_int(1, 3));
        spec.ph = static_cast<int>(rng.uniform_int(0, 3));
        spec.pw = static_cast<int>(rng.uniform_int(0, 3));
        spec.dh = static_cast<int>(rng.uniform_int(1, 3));
        spec.dw = static_cast<int>(rng.uniform_int(1, 3));
        spec.in_channels = 1;
        spec.out_channels = 1;
        const int h = static_cast<int>(rng.uniform_int(4, 14));
        const int w = static_cast<int>(rng.uniform_int(4, 14));
        const int ho = (h + 2 * spec.ph - spec.dh * (spec.kh - 1) - 1) / spec.sh + 1;
        const int wo = (w + 2 * spec.pw - spec.dw * (spec.kw - 1) - 1) / spec.sw + 1;
        if (ho < 1 || wo < 1) continue;
        Tensor input = random_tensor<float>(1, 1, h, w, rng);
        Tensor weights = random_tensor<float>(1, 1, spec.kh, spec.kw, rng);
        std::array<float, 1> bias = {0.0f};
        auto out = ops::conv2d(input, weights, std::span<const float>(bias), spec);
        CHECK(out.h == ho);
        CHECK(out.w == wo);
    }
}

TEST_CASE("conv2d rejects shape mismatches with named dimensions") {
    Tensor input = filled<float>(1, 2, 4, 4, 0.0f);
    Tensor weights = filled<float>(1, 3, 3, 3, 0.0f); // wrong in_channels
    std::array<float, 1> bias = {0.0f};
    CHECK_THROWS_WITH_AS(
        ops::conv2d(input, weights, std::span<const float>(bias), ConvSpec::simple(2, 1, 3, 1)),
        doctest::Contains("weight shape"), Error);
    Tensor w2 = filled<float>(1, 2, 3, 3, 0.0f);
    ConvSpec shrink = ConvSpec::simple(2, 1, 3, 0); // no pad: 4 -> 2, fine
    CHECK_NOTHROW(ops::conv2d(input, w2, std::span<const float>(bias), shrink));
    Tensor tiny = filled<float>(1, 2, 2, 2, 0.0f); // 2px input, k=3, no pad -> empty
    CHECK_THROWS_WITH_AS(
        ops::conv2d(tiny, w2, std::span<const float>(bias), shrink),
        doctest::Contains("zero-size"), Error);
}

TEST_CASE("forward passes are pure: identical inputs give bit-identical outputs") {
    Rng rng(5);
    Tensor input = random_tensor<float>(2, 3, 9, 9, rng);
    Tensor weights = random_tensor<float>(4, 3, 3, 3, rng);
    std::array<float, 4> bias = {0.1f, -0.2f, 0.3f, 0.0f};
    const auto a = ops::conv2d(input, weights, std::span<const float>(bias), ConvSpec::simple(3, 4, 3, 1));
    const auto b = ops::conv2d(input, weights, std::span<const float>(bias), ConvSpec::simple(3, 4, 3, 1));
    CHECK(a.data == b.data);
    const auto sa = ops::channel_softmax(a);
    const auto sb = ops::channel_softmax(b);
    CHECK(sa.data == sb.data);
}

TEST_CASE("transposed conv upsamples by exactly the factor") {
    Tensor input = filled<float>(1, 1, 64, 64, 1.0f);
    auto weights = ops::bilinear_deconv_weights<float>(1, 8);
    auto out = ops::transposed_conv2d(input, weights, 8);
    CHECK(out.h == 512);
    CHECK(out.w == 512);
    CHECK(out.c == 1);
}

TEST_CASE("bilinear deconv weights carry a constant through the interior") {
    for (int factor : {2, 4, 8}) {
        Tensor input = filled<float>(1, 2, 6, 6, 5.0f);
        auto weights = ops::bilinear_deconv_weights<float>(2, factor);
        auto out = ops::transposed_conv2d(input, weights, factor);
        REQUIRE(out.h == 6 * factor);
        // interior: at least factor away from each border
        for (int y = factor; y < out.h - factor; ++y)
            for (int x = factor; x < out.w - factor; ++x) {
                CHECK(out.at(0, 0, y, x) == doctest::Approx(5.0f).epsilon(1e-9));
                CHECK(out.at(0, 1, y, x) == doctest::Approx(5.0f).epsilon(1e-9));
            }
    }
}

TEST_CASE("transposed conv validates the factor") {
    Tensor input = filled<float>(1, 1, 4, 4, 1.0f);
    auto weights = ops::bilinear_deconv_weights<float>(1, 2);
    CHECK_THROWS_AS(ops::transposed_conv2d(input, weights, 0), Error);
    CHECK_THROWS_AS(ops::transposed_conv2d(input, weights, -3), Error);
}

TEST_CASE("maxpool keeps a constant constant (padding never wins)") {
    for (float v : {5.0f, -5.0f}) {
        Tensor input = filled<float>(1, 2, 6, 6, v);
        auto out = ops::maxpool2d(input, 3, 1, 1);
        REQUIRE(out.h == 6);
        for (float o : out.data) CHECK(o == v);
    }
}

TEST_CASE("maxpool 2x2 stride 2 reduces [[1,2],[3,4]] to [[4]]") {
    Tensor input(1, 1, 2, 2);
    input.data = {1, 2, 3, 4};
    auto out = ops::maxpool2d(input, 2, 2, 0);
    REQUIRE(out.size() == 1);
    CHECK(out.data[0] == 4.0f);
}

TEST_CASE("maxpool backward routes the gradient to the argmax only") {
    Tensor input(1, 1, 2, 2);
    input.data = {1, 2, 3, 4};
    input.ensure_grad();
    auto res = ops::maxpool2d_fwd(input, 2, 2, 0);
    res.output.ensure_grad();
    res.output.grad[0] = 1.0f;
    ops::maxpool2d_backward(res, input);
    CHECK(input.grad[0] == 0.0f);
    CHECK(input.grad[1] == 0.0f);
    CHECK(input.grad[2] == 0.0f);
    CHECK(input.grad[3] == 1.0f);
}

TEST_CASE("maxpool tie-break picks the first element in row-major order") {
    Tensor input = filled<float>(1, 1, 2, 2, 7.0f);
    input.ensure_grad();
    auto res = ops::maxpool2d_fwd(input, 2, 2, 0);
    res.output.ensure_grad();
    res.output.grad[0] = 1.0f;
    ops::maxpool2d_backward(res, input);
    CHECK(input.grad[0] == 1.0f);
    CHECK(input.grad[1] == 0.0f);
}

TEST_CASE("maxpool rejects a window living entirely in padding") {
    Tensor input = filled<float>(1, 1, 4, 4, 0.0f);
    CHECK_THROWS_WITH_AS(ops::maxpool2d(input, 2, 1, 2), doctest::Contains("padding"), Error);
}

TEST_CASE("channel_concat stacks four 128-channel maps into 512 channels") {
    Rng rng(3);
    auto a = random_tensor<float>(1, 128, 2, 2, rng);
    auto b = random_tensor<float>(1, 128, 2, 2, rng);
    auto c = random_tensor<float>(1, 128, 2, 2, rng);
    auto d = random_tensor<float>(1, 128, 2, 2, rng);
    const std::array<const Tensor*, 4> parts = {&a, &b, &c, &d};
    auto out = ops::channel_concat<float>(parts);
    CHECK(out.c == 512);
    CHECK(out.at(0, 0, 1, 1) == a.at(0, 0, 1, 1));
    CHECK(out.at(0, 128, 0, 0) == b.at(0, 0, 0, 0));
    CHECK(out.at(0, 511, 1, 0) == d.at(0, 127, 1, 0));
}

TEST_CASE("channel_concat of one tensor is the identity") {
    Rng rng(4);
    auto a = random_tensor<float>(2, 3, 4, 5, rng);
    const std::array<const Tensor*, 1> parts = {&a};
    auto out = ops::channel_concat<float>(parts);
    CHECK(out.data == a.data);
}

TEST_CASE("channel_concat names the input that disagrees spatially") {
    Tensor a = filled<float>(1, 2, 4, 4, 0.0f);
    Tensor b = filled<float>(1, 2, 5, 4, 0.0f);
    const std::array<const Tensor*, 2> parts = {&a, &b};
    CHECK_THROWS_WITH_AS(ops::channel_concat<float>(parts), doctest::Contains("input 1"), Error);
}

TEST_CASE("concat backward recovers each input gradient exactly") {
    Rng rng(9);
    auto a = random_tensor<float>(1, 2, 3, 3, rng);
    auto b = random_tensor<float>(1, 5, 3, 3, rng);
    a.ensure_grad();
    b.ensure_grad();
    const std::array<const Tensor*, 2> parts = {&a, &b};
    auto out = ops::channel_concat<float>(parts);
    out.ensure_grad();
    for (std::size_t i = 0; i < out.grad.size(); ++i)
        out.grad[i] = static_cast<float>(i) * 0.25f - 3.0f;
    const std::array<Tensor*, 2> gparts = {&a, &b};
    ops::channel_concat_backward(out, std::span<Tensor* const>(gparts));
    for (int ic = 0; ic < 2; ++ic)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                CHECK(a.grad[a.index(0, ic, y, x)] == out.grad[out.index(0, ic, y, x)]);
    for (int ic = 0; ic < 5; ++ic)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                CHECK(b.grad[b.index(0, ic, y, x)] == out.grad[out.index(0, ic + 2, y, x)]);
}

TEST_CASE("channel_softmax of equal logits is uniform") {
    Tensor logits = filled<float>(1, 2, 4, 4, 1.7f);
    auto out = ops::channel_softmax(logits);
    for (float v : out.data) CHECK(v == doctest::Approx(0.5f));
}

TEST_CASE("channel_softmax of (0, ln 3) gives (0.25, 0.75)") {
    Tensor logits(1, 2, 1, 1);
    logits.data = {0.0f, std::log(3.0f)};
    auto out = ops::channel_softmax(logits);
    CHECK(out.data[0] == doctest::Approx(0.25f));
    CHECK(out.data[1] == doctest::Approx(0.75f));
}

TEST_CASE("channel_softmax normalises per pixel and stays in (0,1)") {
    Rng rng(21);
    auto logits = random_tensor<float>(2, 5, 6, 6, rng);
    for (auto& v : logits.data) v *= 30.0f; // large logits stress the stabiliser
    auto out = ops::channel_softmax(logits);
    for (int bn = 0; bn < 2; ++bn)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                float sum = 0;
                for (int ic = 0; ic < 5; ++ic) {
                    const float v = out.at(bn, ic, y, x);
                    CHECK(v > 0.0f);
                    CHECK(v < 1.0f);
                    sum += v;
                }
                CHECK(std::abs(sum - 1.0f) < 1e-6f);
            }
}

TEST_CASE("elementwise_scale identity and annihilator maps") {
    Rng rng(8);
    auto features = random_tensor<float>(1, 4, 5, 5, rng);
    auto ones = filled<float>(1, 1, 5, 5, 1.0f);
    auto zeros = filled<float>(1, 1, 5, 5, 0.0f);
    CHECK(ops::elementwise_scale(features, ones).data == features.data);
    for (float v : ops::elementwise_scale(features, zeros).data) CHECK(v == 0.0f);

    auto bad = filled<float>(1, 1, 4, 5, 1.0f);
    CHECK_THROWS_AS(ops::elementwise_scale(features, bad), Error);
}

TEST_CASE("smooth_l1 closed-form values") {
    const auto one = [](double x) {
        std::array<double, 1> p = {x}, t = {0.0};
        return ops::smooth_l1(std::span<const double>(p), std::span<const double>(t));
    };
    CHECK(one(0.0) == doctest::Approx(0.0));
    CHECK(one(0.5) == doctest::Approx(0.125));
    CHECK(one(2.0) == doctest::Approx(1.5));
    CHECK(one(-2.0) == doctest::Approx(1.5));

    std::array<double, 2> p = {1.0, 2.0}, t = {0.0};
    CHECK_THROWS_AS(ops::smooth_l1(std::span<const double>(p), std::span<const double>(t)), Error);
}

TEST_CASE("softmax_cross_entropy closed-form values") {
    Tensor logits(1, 2, 1, 2);
    // position 0: confidently correct; position 1: uniform
    logits.at(0, 0, 0, 0) = 20.0f;
    logits.at(0, 1, 0, 0) = 0.0f;
    logits.at(0, 0, 0, 1) = 0.0f;
    logits.at(0, 1, 0, 1) = 0.0f;

    CHECK(ops::softmax_cross_entropy(logits, {0, -1}, -1) < 1e-6f);
    CHECK(ops::softmax_cross_entropy(logits, {-1, 1}, -1) ==
          doctest::Approx(std::log(2.0f)).epsilon(1e-6));
    CHECK_THROWS_WITH_AS(ops::softmax_cross_entropy(logits, {0, 3}, -1),
                         doctest::Contains("out of range"), Error);
}

TEST_CASE("ignored positions contribute zero loss and zero gradient") {
    Rng rng(2);
    TensorT<double> logits = random_tensor<double>(1, 2, 3, 3, rng);
    std::vector<int> labels(9, -1);
    labels[4] = 1;

    const double base = ops::softmax_cross_entropy(logits, labels, -1);
    logits.ensure_grad();
    ops::softmax_cross_entropy_backward(logits, labels, -1, 1.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            if (y == 1 && x == 1) continue;
            CHECK(logits.grad[logits.index(0, 0, y, x)] == 0.0);
            CHECK(logits.grad[logits.index(0, 1, y, x)] == 0.0);
        }
    // perturbing an ignored logit leaves the loss untouched
    logits.at(0, 0, 0, 0) += 5.0;
    CHECK(ops::softmax_cross_entropy(logits, labels, -1) == base);
}

TEST_CASE("bilinear_resize of a constant map is constant") {
    Tensor input = filled<float>(1, 1, 512 / 8, 512 / 8, 0.37f);
    auto up = ops::bilinear_resize(input, 512, 512);
    for (float v : up.data) CHECK(v == doctest::Approx(0.37f));
    auto down = ops::bilinear_resize(input, 16, 16);
    for (float v : down.data) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("smooth_l1 gradcheck skips the kink neighbourhood") {
    Rng rng(33);
    TensorT<double> pred(1, 1, 1, 8);
    TensorT<double> target(1, 1, 1, 8);
    for (int i = 0; i < 8; ++i) {
        pred.data[i] = rng.uniform(-2.0, 2.0);
        target.data[i] = rng.uniform(-2.0, 2.0);
    }
    pred.data[3] = target.data[3] + 1.0; // park one element exactly on the kink

    const double eps = 1e-6;
    const auto loss = [&] {
        return ops::smooth_l1(std::span<const double>(pred.data),
                              std::span<const double>(target.data));
    };
    const auto grads = [&] {
        std::vector<double> g(8, 0.0);
        ops::smooth_l1_backward(std::span<const double>(pred.data),
                                std::span<const double>(target.data), 1.0, std::span<double>(g));
        return std::vector<std::vector<double>>{g};
    };
    GradCheckOptions opts;
    opts.eps = eps;
    opts.skip = [&](int, std::size_t i) {
        return std::abs(std::abs(pred.data[i] - target.data[i]) - 1.0) < 10 * eps;
    };
    std::array<TensorT<double>*, 1> inputs = {&pred};
    CHECK(gradcheck(inputs, loss, grads, opts) < 1e-5);
}
