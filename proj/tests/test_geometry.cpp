#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "sstd/geometry.hpp"
#include "sstd/rng.hpp"

using namespace sstd;

namespace {

constexpr double kPi = 3.14159265358979323846;

OrientedBox random_box(Rng& rng, bool rotated) {
    OrientedBox b;
    b.cx = rng.uniform(-10, 10);
    b.cy = rng.uniform(-10, 10);
    b.w = rng.uniform(0.5, 8.0);
    b.h = rng.uniform(0.5, 8.0);
    b.theta = rotated ? rng.uniform(-kPi / 2 + 1e-3, kPi / 2) : 0.0;
    return b;
}

// Monte-Carlo IoU estimate by point sampling over the joint bounding box.
double monte_carlo_iou(const OrientedBox& a, const OrientedBox& b, int samples, Rng& rng) {
    const double cta = std::cos(a.theta), sta = std::sin(a.theta);
    const double ctb = std::cos(b.theta), stb = std::sin(b.theta);
    const auto inside = [](const OrientedBox& box, double ct, double st, double x, double y) {
        const double dx = x - box.cx, dy = y - box.cy;
        const double u = dx * ct + dy * st;
        const double v = -dx * st + dy * ct;
        return std::abs(u) <= box.w / 2 && std::abs(v) <= box.h / 2;
    };
    const OrientedBox ea = enclosing_axis_aligned(a), eb = enclosing_axis_aligned(b);
    const double x0 = std::min(ea.cx - ea.w / 2, eb.cx - eb.w / 2);
    const double x1 = std::max(ea.cx + ea.w / 2, eb.cx + eb.w / 2);
    const double y0 = std::min(ea.cy - ea.h / 2, eb.cy - eb.h / 2);
    const double y1 = std::max(ea.cy + ea.h / 2, eb.cy + eb.h / 2);
    long na = 0, nb = 0, nboth = 0;
    for (int s = 0; s < samples; ++s) {
        const double x = rng.uniform(x0, x1), y = rng.uniform(y0, y1);
        const bool ia = inside(a, cta, sta, x, y), ib = inside(b, ctb, stb, x, y);
        na += ia;
        nb += ib;
        nboth += ia && ib;
    }
    const long uni = na + nb - nboth;
    return uni > 0 ? static_cast<double>(nboth) / uni : 0.0;
}

// quadratic reference suppression, kept deliberately independent of nms()
std::vector<std::size_t> brute_force_nms(const std::vector<Detection>& dets, double thr,
                                         bool rotated) {
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool ok = true;
        for (std::size_t k : kept) {
            const double iou =
                rotated ? iou_rotated(dets[i].box, dets[k].box)
                        : iou_axis_aligned(enclosing_axis_aligned(dets[i].box),
                                           enclosing_axis_aligned(dets[k].box));
            if (iou > thr) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }
    return kept;
}

} // namespace

TEST_CASE("axis-aligned IoU basics") {
    OrientedBox a{1, 1, 2, 2, 0};
    CHECK(iou_axis_aligned(a, a) == doctest::Approx(1.0));
    OrientedBox apart{100, 100, 2, 2, 0};
    CHECK(iou_axis_aligned(a, apart) == doctest::Approx(0.0));
    OrientedBox shifted{2, 1, 2, 2, 0};
    CHECK(iou_axis_aligned(a, shifted) == doctest::Approx(1.0 / 3.0));
    OrientedBox tilted{1, 1, 2, 2, 0.2};
    CHECK_THROWS_AS(iou_axis_aligned(a, tilted), Error);
}

TEST_CASE("rotated IoU reduces to the axis-aligned result at theta 0") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const OrientedBox a = random_box(rng, false);
        const OrientedBox b = random_box(rng, false);
        CHECK(std::abs(iou_rotated(a, b) - iou_axis_aligned(a, b)) < 1e-12);
    }
}

TEST_CASE("unit square vs itself rotated 45 degrees") {
    // octagon overlap: 2(sqrt(2)-1) intersection over 2 - 2(sqrt(2)-1) union
    const double inter = 2.0 * (std::sqrt(2.0) - 1.0);
    const double expected = inter / (2.0 - inter);
    OrientedBox sq{0, 0, 1, 1, 0};
    OrientedBox rot{0, 0, 1, 1, kPi / 4};
    CHECK(iou_rotated(sq, rot) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.7071).epsilon(1e-3));
}

TEST_CASE("identical rotated boxes overlap fully") {
    OrientedBox b{3, -2, 4, 1.5, 0.7};
    CHECK(iou_rotated(b, b) == doctest::Approx(1.0));
}

TEST_CASE("rotated IoU rejects degenerate boxes") {
    OrientedBox ok{0, 0, 1, 1, 0};
    OrientedBox flat{0, 0, 1e-9, 1e-9, 0.3};
    CHECK_THROWS_WITH_AS(iou_rotated(ok, flat), doctest::Contains("degenerate"), Error);
}

TEST_CASE("rotated IoU agrees with a Monte-Carlo oracle") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        OrientedBox a = random_box(rng, true);
        OrientedBox b = random_box(rng, true);
        // keep the pair in contact range so the estimate is informative
        b.cx = a.cx + rng.uniform(-4, 4);
        b.cy = a.cy + rng.uniform(-4, 4);
        const double exact = iou_rotated(a, b);
        Rng mc(1000 + static_cast<std::uint64_t>(trial));
        const double estimate = monte_carlo_iou(a, b, 1000000, mc);
        CHECK(std::abs(exact - estimate) < 0.005);
    }
}

TEST_CASE("IoU symmetry and bounds") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const OrientedBox a = random_box(rng, true);
        const OrientedBox b = random_box(rng, true);
        const double ab = iou_rotated(a, b), ba = iou_rotated(b, a);
        CHECK(std::abs(ab - ba) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("IoU is invariant under uniform coordinate scaling") {
    Rng rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        const OrientedBox a = random_box(rng, true);
        OrientedBox b = random_box(rng, true);
        b.cx = a.cx + rng.uniform(-4, 4);
        b.cy = a.cy + rng.uniform(-4, 4);
        const double s = rng.uniform(0.1, 20.0);
        const OrientedBox as{a.cx * s, a.cy * s, a.w * s, a.h * s, a.theta};
        const OrientedBox bs{b.cx * s, b.cy * s, b.w * s, b.h * s, b.theta};
        CHECK(std::abs(iou_rotated(a, b) - iou_rotated(as, bs)) < 1e-9);
    }
}

TEST_CASE("nms keeps a single detection") {
    std::vector<Detection> dets = {{{0, 0, 2, 2, 0}, 0.9}};
    const auto kept = nms(dets, 0.3);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9);
}

TEST_CASE("nms suppresses the lower-scored of an overlapping pair") {
    // IoU 0.5: 2x2 boxes offset so intersection 2 over union 4... use 1/3 pair
    std::vector<Detection> dets = {{{1, 1, 2, 2, 0}, 0.6}, {{1.5, 1, 2, 2, 0}, 0.8}};
    const double iou = iou_axis_aligned(dets[0].box, dets[1].box);
    REQUIRE(iou > 0.3);
    const auto kept = nms(dets, 0.3);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.8);
}

TEST_CASE("nms thresholds are validated") {
    std::vector<Detection> dets;
    CHECK_THROWS_AS(nms(dets, 0.0), Error);
    CHECK_THROWS_AS(nms(dets, 1.0), Error);
}

TEST_CASE("nms equals brute-force suppression on 200 random sets") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(0, 50));
        std::vector<Detection> dets;
        dets.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Detection d;
            d.box = random_box(rng, trial % 2 == 1);
            d.box.cx = rng.uniform(0, 20);
            d.box.cy = rng.uniform(0, 20);
            d.score = rng.uniform(0.0, 1.0);
            dets.push_back(d);
        }
        const bool rotated = trial % 2 == 1;
        const double thr = rng.uniform(0.1, 0.9);
        const auto kept = nms(dets, thr, rotated);
        const auto ref = brute_force_nms(dets, thr, rotated);
        REQUIRE(kept.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(kept[i].score == dets[ref[i]].score);
            CHECK(kept[i].box.cx == dets[ref[i]].box.cx);
        }
        // kept scores are non-increasing and pairwise IoU stays under threshold
        for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1].score >= kept[i].score);
        for (std::size_t i = 0; i < kept.size(); ++i)
            for (std::size_t j = i + 1; j < kept.size(); ++j) {
                const double iou =
                    rotated ? iou_rotated(kept[i].box, kept[j].box)
                            : iou_axis_aligned(enclosing_axis_aligned(kept[i].box),
                                               enclosing_axis_aligned(kept[j].box));
                CHECK(iou <= thr);
            }
    }
}

TEST_CASE("offset encoding closed forms") {
    OrientedBox anchor{10, 10, 4, 2, 0};
    CHECK(encode_offsets(anchor, anchor).tx == doctest::Approx(0.0));
    CHECK(encode_offsets(anchor, anchor).tw == doctest::Approx(0.0));

    OrientedBox gt{11, 10, 8, 2, 0};
    const BoxOffsets off = encode_offsets(gt, anchor);
    CHECK(off.tx == doctest::Approx(0.25));
    CHECK(off.ty == doctest::Approx(0.0));
    CHECK(off.tw == doctest::Approx(std::log(2.0)));
    CHECK(off.th == doctest::Approx(0.0));
    CHECK(off.ttheta == doctest::Approx(0.0));

    OrientedBox tilted_anchor{0, 0, 1, 1, 0.2};
    CHECK_THROWS_AS(encode_offsets(gt, tilted_anchor), Error);
}

TEST_CASE("decode inverts encode to 1e-9 on random pairs") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        OrientedBox anchor = random_box(rng, false);
        OrientedBox gt = random_box(rng, true);
        const OrientedBox back = decode_offsets(encode_offsets(gt, anchor), anchor);
        CHECK(std::abs(back.cx - gt.cx) < 1e-9);
        CHECK(std::abs(back.cy - gt.cy) < 1e-9);
        CHECK(std::abs(back.w - gt.w) < 1e-9);
        CHECK(std::abs(back.h - gt.h) < 1e-9);
        CHECK(std::abs(normalize_theta(back.theta - gt.theta)) < 1e-9);
    }
}

TEST_CASE("zero offsets decode to the anchor itself") {
    OrientedBox anchor{5, 6, 3, 2, 0};
    const OrientedBox out = decode_offsets(BoxOffsets{}, anchor);
    CHECK(out.cx == doctest::Approx(5.0));
    CHECK(out.cy == doctest::Approx(6.0));
    CHECK(out.w == doctest::Approx(3.0));
    CHECK(out.h == doctest::Approx(2.0));
    CHECK(out.theta == doctest::Approx(0.0));
}

TEST_CASE("theta normalisation folds by pi into (-pi/2, pi/2]") {
    CHECK(normalize_theta(kPi) == doctest::Approx(0.0));
    CHECK(normalize_theta(-kPi) == doctest::Approx(0.0));
    CHECK(normalize_theta(kPi / 2) == doctest::Approx(kPi / 2));
    CHECK(normalize_theta(-kPi / 2) == doctest::Approx(kPi / 2)); // boundary folds up
    CHECK(normalize_theta(0.6 + kPi) == doctest::Approx(0.6));

    BoxOffsets off;
    off.ttheta = kPi;
    const OrientedBox out = decode_offsets(off, {0, 0, 1, 1, 0});
    CHECK(out.theta == doctest::Approx(0.0));
}

TEST_CASE("box corners come out clockwise") {
    OrientedBox b{0, 0, 4, 2, 0};
    const auto c = box_corners(b);
    CHECK(c[0][0] == doctest::Approx(-2.0));
    CHECK(c[0][1] == doctest::Approx(-1.0));
    CHECK(c[1][0] == doctest::Approx(2.0));
    CHECK(c[2][1] == doctest::Approx(1.0));
    // shoelace signed doubled area is +2*w*h for clockwise order in y-down coords
    double area2 = 0;
    for (int i = 0; i < 4; ++i) {
        const auto& p = c[i];
        const auto& q = c[(i + 1) % 4];
        area2 += p[0] * q[1] - q[0] * p[1];
    }
    CHECK(area2 == doctest::Approx(16.0));
}
