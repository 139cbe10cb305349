#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sstd/error.hpp"
#include "sstd/kernels.hpp"
#include "sstd/rng.hpp"

using namespace sstd;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return v;
}

// lengths crossing the 8/4-lane boundaries plus ragged tails
const std::size_t kLengths[] = {0, 1, 2, 3, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 130};

template <typename T>
void compare_elementwise_kernels() {
    if (!kern::avx2_supported()) return;
    Rng rng(42);
    for (std::size_t n : kLengths) {
        auto x = random_vec<T>(n + 3, rng);
        auto y0 = random_vec<T>(n + 3, rng);
        auto y1 = y0;
        const T a = static_cast<T>(rng.uniform(-1.5, 1.5));

        // offset by one to exercise unaligned loads
        const std::size_t off = n > 0 ? 1 : 0;
        kern::set_backend(kern::Backend::scalar);
        kern::axpy<T>(n, a, x.data() + off, y0.data() + off);
        kern::set_backend(kern::Backend::avx2);
        kern::axpy<T>(n, a, x.data() + off, y1.data() + off);
        CHECK(y0 == y1); // bit-identical by construction

        auto m0 = random_vec<T>(n, rng);
        auto out0 = std::vector<T>(n, T(0));
        auto out1 = out0;
        kern::set_backend(kern::Backend::scalar);
        kern::mul<T>(n, x.data(), m0.data(), out0.data());
        kern::set_backend(kern::Backend::avx2);
        kern::mul<T>(n, x.data(), m0.data(), out1.data());
        CHECK(out0 == out1);

        auto acc0 = random_vec<T>(n, rng);
        auto acc1 = acc0;
        kern::set_backend(kern::Backend::scalar);
        kern::mul_acc<T>(n, x.data(), m0.data(), acc0.data());
        kern::set_backend(kern::Backend::avx2);
        kern::mul_acc<T>(n, x.data(), m0.data(), acc1.data());
        CHECK(acc0 == acc1);

        auto g = random_vec<T>(n, rng);
        auto v0 = random_vec<T>(n, rng);
        auto v1 = v0;
        auto p0 = random_vec<T>(n, rng);
        auto p1 = p0;
        kern::set_backend(kern::Backend::scalar);
        kern::sgd_step<T>(n, T(0.001), T(0.9), g.data(), v0.data(), p0.data());
        kern::set_backend(kern::Backend::avx2);
        kern::sgd_step<T>(n, T(0.001), T(0.9), g.data(), v1.data(), p1.data());
        CHECK(v0 == v1);
        CHECK(p0 == p1);
    }
    kern::set_backend(kern::avx2_supported() ? kern::Backend::avx2 : kern::Backend::scalar);
}

} // namespace

TEST_CASE("elementwise kernels are bit-identical across backends (f32)") {
    compare_elementwise_kernels<float>();
}

TEST_CASE("elementwise kernels are bit-identical across backends (f64)") {
    compare_elementwise_kernels<double>();
}

TEST_CASE("dot agrees across backends within reassociation tolerance") {
    if (!kern::avx2_supported()) return;
    Rng rng(7);
    for (std::size_t n : kLengths) {
        const auto x = random_vec<float>(n, rng);
        const auto y = random_vec<float>(n, rng);
        kern::set_backend(kern::Backend::scalar);
        const float s = kern::dot<float>(n, x.data(), y.data());
        kern::set_backend(kern::Backend::avx2);
        const float v = kern::dot<float>(n, x.data(), y.data());
        CHECK(std::abs(s - v) <= 1e-5f * std::max(1.0f, std::max(std::abs(s), std::abs(v))));

        const auto xd = random_vec<double>(n, rng);
        const auto yd = random_vec<double>(n, rng);
        kern::set_backend(kern::Backend::scalar);
        const double sd = kern::dot<double>(n, xd.data(), yd.data());
        kern::set_backend(kern::Backend::avx2);
        const double vd = kern::dot<double>(n, xd.data(), yd.data());
        CHECK(std::abs(sd - vd) <= 1e-13 * std::max(1.0, std::max(std::abs(sd), std::abs(vd))));
    }
    kern::set_backend(kern::Backend::avx2);
}

TEST_CASE("scalar kernel reference values") {
    kern::set_backend(kern::Backend::scalar);
    float x[3] = {1, 2, 3};
    float y[3] = {10, 20, 30};
    kern::axpy<float>(3, 2.0f, x, y);
    CHECK(y[0] == 12.0f);
    CHECK(y[1] == 24.0f);
    CHECK(y[2] == 36.0f);
    CHECK(kern::dot<float>(3, x, x) == doctest::Approx(14.0f));

    float g[2] = {1.0f, -1.0f};
    float v[2] = {0.0f, 0.0f};
    float p[2] = {5.0f, 5.0f};
    kern::sgd_step<float>(2, 0.1f, 0.9f, g, v, p);
    // zero momentum history reduces to plain SGD: v = -lr*g, p += v
    CHECK(v[0] == doctest::Approx(-0.1f));
    CHECK(p[0] == doctest::Approx(4.9f));
    CHECK(p[1] == doctest::Approx(5.1f));
    kern::set_backend(kern::avx2_supported() ? kern::Backend::avx2 : kern::Backend::scalar);
}

TEST_CASE("backend dispatch reports availability consistently") {
    if (kern::avx2_supported()) {
        kern::set_backend(kern::Backend::avx2);
        CHECK(kern::active_backend() == kern::Backend::avx2);
    } else {
        CHECK_THROWS_AS(kern::set_backend(kern::Backend::avx2), Error);
    }
    kern::set_backend(kern::Backend::scalar);
    CHECK(kern::active_backend() == kern::Backend::scalar);
    kern::set_backend(kern::avx2_supported() ? kern::Backend::avx2 : kern::Backend::scalar);
}
