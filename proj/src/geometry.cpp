#include "sstd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sstd {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateArea = 1e-12;

struct Pt {
    double x, y;
};

double polygon_area(std::span<const Pt> pts) {
    if (pts.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Pt& a = pts[i];
        const Pt& b = pts[(i + 1) % pts.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

// Sutherland-Hodgman clip of a convex polygon against the half-plane on the
// left of the directed edge a->b (polygons here wind counter-clockwise in
// shoelace orientation).
std::vector<Pt> clip_edge(const std::vector<Pt>& poly, const Pt& a, const Pt& b) {
    std::vector<Pt> out;
    out.reserve(poly.size() + 1);
    const auto side = [&](const Pt& p) {
        return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& cur = poly[i];
        const Pt& nxt = poly[(i + 1) % poly.size()];
        const double sc = side(cur);
        const double sn = side(nxt);
        if (sc >= 0) out.push_back(cur);
        if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
            const double t = sc / (sc - sn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

std::vector<Pt> ccw_corners(const OrientedBox& b) {
    const auto c = box_corners(b);
    std::vector<Pt> pts(4);
    for (int i = 0; i < 4; ++i) pts[i] = {c[i][0], c[i][1]};
    if (polygon_area(pts) < 0) std::reverse(pts.begin(), pts.end());
    return pts;
}

double intersection_area(const OrientedBox& a, const OrientedBox& b) {
    std::vector<Pt> poly = ccw_corners(a);
    const std::vector<Pt> clip = ccw_corners(b);
    for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i)
        poly = clip_edge(poly, clip[i], clip[(i + 1) % clip.size()]);
    return poly.size() < 3 ? 0.0 : std::abs(polygon_area(poly));
}

} // namespace

double normalize_theta(double theta) {
    while (theta > kPi / 2) theta -= kPi;
    while (theta <= -kPi / 2) theta += kPi;
    return theta;
}

std::array<std::array<double, 2>, 4> box_corners(const OrientedBox& b) {
    const double ct = std::cos(b.theta), st = std::sin(b.theta);
    const double hw = b.w / 2, hh = b.h / 2;
    // local corner offsets, clockwise in image coordinates
    const double lx[4] = {-hw, hw, hw, -hw};
    const double ly[4] = {-hh, -hh, hh, hh};
    std::array<std::array<double, 2>, 4> out;
    for (int i = 0; i < 4; ++i) {
        out[i][0] = b.cx + lx[i] * ct - ly[i] * st;
        out[i][1] = b.cy + lx[i] * st + ly[i] * ct;
    }
    return out;
}

OrientedBox enclosing_axis_aligned(const OrientedBox& b) {
    if (b.theta == 0.0) return b;
    const auto c = box_corners(b);
    double xmin = c[0][0], xmax = c[0][0], ymin = c[0][1], ymax = c[0][1];
    for (int i = 1; i < 4; ++i) {
        xmin = std::min(xmin, c[i][0]);
        xmax = std::max(xmax, c[i][0]);
        ymin = std::min(ymin, c[i][1]);
        ymax = std::max(ymax, c[i][1]);
    }
    return {(xmin + xmax) / 2, (ymin + ymax) / 2, xmax - xmin, ymax - ymin, 0.0};
}

double iou_axis_aligned(const OrientedBox& a, const OrientedBox& b) {
    require(a.theta == 0.0 && b.theta == 0.0,
            "iou_axis_aligned: boxes must have theta == 0 (use iou_rotated)");
    const double ix = std::max(
        0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2));
    const double iy = std::max(
        0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

double iou_rotated(const OrientedBox& a, const OrientedBox& b) {
    const double area_a = a.w * a.h, area_b = b.w * b.h;
    require(area_a > kDegenerateArea && area_b > kDegenerateArea,
            "iou_rotated: degenerate (near-zero area) box");
    const double inter = intersection_area(a, b);
    const double uni = area_a + area_b - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold, bool rotated) {
    require(iou_threshold > 0.0 && iou_threshold < 1.0, "nms: iou_threshold must be in (0, 1)");
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return dets[i].score > dets[j].score;
    });

    const auto overlap = [&](const OrientedBox& x, const OrientedBox& y) {
        if (rotated) return iou_rotated(x, y);
        return iou_axis_aligned(enclosing_axis_aligned(x), enclosing_axis_aligned(y));
    };

    std::vector<Detection> kept;
    for (std::size_t i : order) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (overlap(dets[i].box, k.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(dets[i]);
    }
    return kept;
}

BoxOffsets encode_offsets(const OrientedBox& gt, const OrientedBox& anchor) {
    require(anchor.theta == 0.0, "encode_offsets: anchor must be axis-aligned");
    require(gt.w > 0 && gt.h > 0 && anchor.w > 0 && anchor.h > 0,
            "encode_offsets: box sizes must be positive");
    BoxOffsets off;
    off.tx = (gt.cx - anchor.cx) / anchor.w;
    off.ty = (gt.cy - anchor.cy) / anchor.h;
    off.tw = std::log(gt.w / anchor.w);
    off.th = std::log(gt.h / anchor.h);
    off.ttheta = gt.theta;
    return off;
}

OrientedBox decode_offsets(const BoxOffsets& offsets, const OrientedBox& anchor) {
    require(anchor.w > 0 && anchor.h > 0, "decode_offsets: anchor sizes must be positive");
    OrientedBox out;
    out.cx = anchor.cx + offsets.tx * anchor.w;
    out.cy = anchor.cy + offsets.ty * anchor.h;
    out.w = anchor.w * std::exp(offsets.tw);
    out.h = anchor.h * std::exp(offsets.th);
    out.theta = normalize_theta(anchor.theta + offsets.ttheta);
    return out;
}

} // namespace sstd
