#include "sstd/scene_gen.hpp"

#include <algorithm>
#include <cmath>

#include "sstd/rng.hpp"

namespace sstd {
namespace {

float quantize_u8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<float>(std::round(c * 255.0) / 255.0);
}

struct WordStyle {
    double ink;        // dark stroke tone
    double paper;      // bright card tone behind the strokes
    double bar_period; // stroke spacing in px
    double bar_duty;   // fraction of the period that is ink
    double bar_phase;
};

// value-noise background: coarse random grid, bilinear blend, plus speckle
void fill_background(Tensor& img, Rng& rng, double noise) {
    const int cell = 16;
    const int gw = img.w / cell + 2, gh = img.h / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (auto& g : grid) g = rng.uniform(0.55, 0.95);

    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const double fx = static_cast<double>(x) / cell, fy = static_cast<double>(y) / cell;
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const double tx = fx - x0, ty = fy - y0;
            const double v00 = grid[y0 * gw + x0], v01 = grid[y0 * gw + x0 + 1];
            const double v10 = grid[(y0 + 1) * gw + x0], v11 = grid[(y0 + 1) * gw + x0 + 1];
            double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
            v += rng.uniform(-noise, noise);
            for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = quantize_u8(v);
        }
    }
}

} // namespace

SceneSample generate_scene(std::uint64_t seed, const SceneGenConfig& cfg) {
    require(cfg.size >= 32, "generate_scene: size must be >= 32");
    require(cfg.min_words >= 0 && cfg.max_words >= cfg.min_words,
            "generate_scene: bad word count range");

    Rng rng(seed);
    SceneSample sample;
    sample.image = Tensor(1, 3, cfg.size, cfg.size);
    sample.mask = BinaryMask(cfg.size, cfg.size);
    fill_background(sample.image, rng, cfg.noise);

    const int target_words = static_cast<int>(rng.uniform_int(cfg.min_words, cfg.max_words));
    std::vector<WordStyle> styles;

    for (int wi = 0; wi < target_words; ++wi) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
            OrientedBox box;
            box.h = rng.uniform(cfg.word_height_lo, cfg.word_height_hi);
            box.w = box.h * rng.uniform(cfg.aspect_lo, cfg.aspect_hi);
            box.theta = cfg.rotation_range > 0
                            ? rng.uniform(-cfg.rotation_range, cfg.rotation_range)
                            : 0.0;
            const OrientedBox enc = enclosing_axis_aligned(box);
            const double ex = enc.w / 2 + 1.0, ey = enc.h / 2 + 1.0;
            if (2 * ex >= cfg.size || 2 * ey >= cfg.size) continue;
            box.cx = rng.uniform(ex, cfg.size - ex);
            box.cy = rng.uniform(ey, cfg.size - ey);

            bool separable = true;
            for (const OrientedBox& other : sample.boxes) {
                if (iou_rotated(box, other) > cfg.max_pair_iou) {
                    separable = false;
                    break;
                }
            }
            if (!separable) continue;

            sample.boxes.push_back(box);
            WordStyle st;
            st.ink = rng.uniform(0.02, 0.22);
            st.paper = rng.uniform(0.78, 0.98);
            st.bar_period = std::max(3.0, box.h / 3.0);
            st.bar_duty = rng.uniform(0.4, 0.6);
            st.bar_phase = rng.uniform(0.0, st.bar_period);
            styles.push_back(st);
            placed = true;
        }
        // placement can fail on crowded scenes; fewer words is fine
    }

    // rasterise: pixel centres inside a box get that word's bar pattern
    for (std::size_t bi = 0; bi < sample.boxes.size(); ++bi) {
        const OrientedBox& b = sample.boxes[bi];
        const WordStyle& st = styles[bi];
        const double ct = std::cos(b.theta), stheta = std::sin(b.theta);
        const OrientedBox enc = enclosing_axis_aligned(b);
        const int x_lo = std::max(0, static_cast<int>(std::floor(enc.cx - enc.w / 2)));
        const int x_hi = std::min(cfg.size - 1, static_cast<int>(std::ceil(enc.cx + enc.w / 2)));
        const int y_lo = std::max(0, static_cast<int>(std::floor(enc.cy - enc.h / 2)));
        const int y_hi = std::min(cfg.size - 1, static_cast<int>(std::ceil(enc.cy + enc.h / 2)));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                const double px = x + 0.5 - b.cx, py = y + 0.5 - b.cy;
                const double u = px * ct + py * stheta;
                const double v = -px * stheta + py * ct;
                if (std::abs(u) > b.w / 2 || std::abs(v) > b.h / 2) continue;
                sample.mask.at(y, x) = 1;
                const double along = u + b.w / 2 + st.bar_phase;
                const double frac = along / st.bar_period - std::floor(along / st.bar_period);
                const double margin = std::min(1.5, b.h * 0.12);
                const bool in_stroke_band = std::abs(v) < b.h / 2 - margin;
                const double tone = (in_stroke_band && frac < st.bar_duty) ? st.ink : st.paper;
                for (int c = 0; c < 3; ++c) sample.image.at(0, c, y, x) = quantize_u8(tone);
            }
        }
    }
    return sample;
}

} // namespace sstd
