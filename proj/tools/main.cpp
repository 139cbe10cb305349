// Command-line shell: gen-data, train, detect, eval, gradcheck, anchors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "sstd/augment.hpp"
#include "sstd/dataset.hpp"
#include "sstd/detector.hpp"
#include "sstd/eval.hpp"
#include "sstd/gradcheck_suite.hpp"
#include "sstd/image_io.hpp"
#include "sstd/scene_gen.hpp"
#include "sstd/weights_io.hpp"

namespace fs = std::filesystem;
using namespace sstd;

namespace {

DetectorConfig config_or_default(const std::string& path) {
    if (path.empty()) return DetectorConfig::desk_default();
    return load_config(path);
}

int cmd_gen_data(const std::string& out_dir, int count, std::uint64_t seed, int size) {
    SceneGenConfig gen;
    gen.size = size;
    std::vector<SceneSample> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        samples.push_back(generate_scene(seed + static_cast<std::uint64_t>(i), gen));
    write_dataset(samples, out_dir);
    std::cout << "wrote " << samples.size() << " scenes to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, int steps,
              std::uint64_t seed, const std::string& out_path, const std::string& log_path) {
    DetectorConfig cfg = config_or_default(config_path);
    require(cfg.runnable(), "train: config cannot build a model (no backbone)");

    const auto dataset = load_dataset(data_dir);
    for (const auto& s : dataset)
        require(s.image.h == cfg.input_size && s.image.w == cfg.input_size,
                "train: dataset image size does not match config input_size");

    const AnchorSet anchors = generate_default_boxes(cfg.anchor_specs(), cfg.input_size);
    Rng rng(seed);
    ModelParams params = init_params<float>(cfg, rng);
    OptimizerState state;

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) fail_io("cannot write log file '" + log_path + "'");
    }

    Rng batch_rng = rng.fork();
    std::vector<SceneSample> batch;
    for (int step = 0; step < steps; ++step) {
        batch.clear();
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto idx = batch_rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1);
            batch.push_back(dataset[static_cast<std::size_t>(idx)]);
        }
        const auto rec = train_step(batch, params, state, cfg, anchors, rng);
        if (log) log << step << " " << rec.total << " " << rec.cls << " " << rec.loc << " "
                     << rec.att << "\n";
        if (step % 100 == 0)
            std::cout << "step " << step << " loss " << rec.total << " (cls " << rec.cls << ", loc "
                      << rec.loc << ", att " << rec.att << ")\n";
    }

    save_weights(params, out_path);
    std::cout << "saved weights to " << out_path << "\n";
    return 0;
}

int cmd_detect(const std::string& weights_path, const std::string& image_path,
               const std::string& config_path, double conf, double nms_thr,
               const std::string& out_path, bool emit_attention, bool emit_overlay) {
    DetectorConfig cfg = config_or_default(config_path);
    require(cfg.runnable(), "detect: config cannot build a model (no backbone)");
    const ModelParams params = load_weights(weights_path);
    const Tensor image = read_ppm(image_path);
    require(image.h == cfg.input_size && image.w == cfg.input_size,
            "detect: image is " + std::to_string(image.w) + "x" + std::to_string(image.h) +
                ", config expects " + std::to_string(cfg.input_size));
    const AnchorSet anchors = generate_default_boxes(cfg.anchor_specs(), cfg.input_size);

    const auto dets = detect(image, params, cfg, anchors, conf, nms_thr);
    for (const auto& d : dets) std::cout << format_detection_line(d) << "\n";
    if (!out_path.empty()) write_detections(dets, out_path);

    const std::string stem = fs::path(image_path).stem().string();
    if (emit_attention) {
        const auto fr = forward(image, params, cfg);
        const auto* maps = fr.attention_maps();
        require(maps != nullptr, "detect: --emit-attention requires attention enabled in config");
        write_pgm_gray(maps->alpha_pos, stem + ".att.pgm");
        std::cout << "wrote " << stem << ".att.pgm\n";
    }
    if (emit_overlay) {
        Tensor overlay = image;
        for (const auto& d : dets) {
            const auto corners = box_corners(d.box);
            for (int e = 0; e < 4; ++e) {
                const auto& a = corners[e];
                const auto& b = corners[(e + 1) % 4];
                const int n = static_cast<int>(std::hypot(b[0] - a[0], b[1] - a[1])) * 2 + 1;
                for (int s = 0; s <= n; ++s) {
                    const double t = static_cast<double>(s) / n;
                    const int x = static_cast<int>(std::lround(a[0] + t * (b[0] - a[0])));
                    const int y = static_cast<int>(std::lround(a[1] + t * (b[1] - a[1])));
                    if (x < 0 || y < 0 || x >= overlay.w || y >= overlay.h) continue;
                    overlay.at(0, 0, y, x) = 0.0f;
                    overlay.at(0, 1, y, x) = 1.0f;
                    overlay.at(0, 2, y, x) = 0.0f;
                }
            }
        }
        write_ppm(overlay, stem + ".overlay.ppm");
        std::cout << "wrote " << stem << ".overlay.ppm\n";
    }
    return 0;
}

std::vector<fs::path> sorted_files(const std::string& dir, const std::string& suffix) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() >= suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_eval(const std::string& det_dir, const std::string& gt_dir, double iou, bool rotated,
             const std::string& report_path) {
    const auto gt_files = sorted_files(gt_dir, ".boxes.txt");
    require(!gt_files.empty(), "eval: no .boxes.txt files in '" + gt_dir + "'");

    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<OrientedBox>> gts;
    for (const auto& gt_file : gt_files) {
        gts.push_back(read_boxes(gt_file.string()));
        std::string stem = gt_file.filename().string();
        stem = stem.substr(0, stem.size() - std::string(".boxes.txt").size());
        const fs::path det_file = fs::path(det_dir) / (stem + ".det.txt");
        dets.push_back(fs::exists(det_file) ? read_detections(det_file.string())
                                            : std::vector<Detection>{});
    }

    const EvalReport report = evaluate_detections(dets, gts, iou, rotated);
    std::printf("%.4f %.4f %.4f\n", report.precision, report.recall, report.f_measure);

    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) fail_io("cannot write report file '" + report_path + "'");
        for (std::size_t i = 0; i < report.per_image.size(); ++i) {
            out << gt_files[i].filename().string() << " matched " << report.per_image[i].size()
                << "/" << gts[i].size() << "\n";
            for (const auto& m : report.per_image[i])
                out << "  det " << m.det_index << " -> gt " << m.gt_index << " iou " << m.iou
                    << "\n";
        }
    }
    return 0;
}

int cmd_anchors(const std::string& config_path, bool full_scale, const std::string& out_path) {
    DetectorConfig cfg = full_scale ? DetectorConfig::full_scale() : config_or_default(config_path);
    const AnchorSet set = generate_default_boxes(cfg.anchor_specs(), cfg.input_size);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) fail_io("cannot write '" + out_path + "'");
        out = &file;
    }
    for (const auto& layer : set.layers) {
        for (std::size_t i = layer.begin; i < layer.end; ++i) {
            const std::size_t within = i - layer.begin;
            const int cell = static_cast<int>(within / set.per_location);
            const int iy = cell / layer.grid_w, ix = cell % layer.grid_w;
            const OrientedBox& b = set.boxes[i];
            char line[160];
            std::snprintf(line, sizeof(line), "%s %d %d %.6f %.6f %.6f %.6f %.6f",
                          layer.name.c_str(), iy, ix, b.cx, b.cy, b.w, b.h, b.theta);
            *out << line << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot oriented word-box detector"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "generate synthetic scenes");
    std::string gen_out;
    int gen_count = 16, gen_size = 128;
    std::uint64_t gen_seed = 1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of scenes");
    gen->add_option("--seed", gen_seed, "base seed");
    gen->add_option("--size", gen_size, "image side in pixels");

    auto* train = app.add_subcommand("train", "train on a dataset directory");
    std::string train_cfg, train_data, train_out = "weights.sstd", train_log;
    int train_steps = 2000;
    std::uint64_t train_seed = 1;
    train->add_option("--config", train_cfg, "config json (defaults to the built-in desk config)");
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--steps", train_steps, "training steps");
    train->add_option("--seed", train_seed, "seed");
    train->add_option("--out", train_out, "weights output path");
    train->add_option("--log", train_log, "per-step loss log path");

    auto* det = app.add_subcommand("detect", "run detection on one image");
    std::string det_weights, det_image, det_cfg, det_out;
    double det_conf = -1, det_nms = -1;
    bool det_att = false, det_overlay = false;
    det->add_option("--weights", det_weights, "weights file")->required();
    det->add_option("--image", det_image, "input .ppm image")->required();
    det->add_option("--config", det_cfg, "config json");
    det->add_option("--conf", det_conf, "confidence threshold override");
    det->add_option("--nms", det_nms, "NMS IoU threshold override");
    det->add_option("--out", det_out, "write detections to this file");
    det->add_flag("--emit-attention", det_att, "write the attention map as an 8-bit pgm");
    det->add_flag("--emit-overlay", det_overlay, "write the image with detection outlines");

    auto* ev = app.add_subcommand("eval", "score detections against ground truth");
    std::string ev_det, ev_gt, ev_report;
    double ev_iou = 0.5;
    bool ev_rot = false;
    ev->add_option("--det", ev_det, "directory with NNNN.det.txt files")->required();
    ev->add_option("--gt", ev_gt, "directory with NNNN.boxes.txt files")->required();
    ev->add_option("--iou", ev_iou, "match threshold");
    ev->add_flag("--rotated-iou", ev_rot, "use exact rotated-box overlap");
    ev->add_option("--report", ev_report, "write per-image match report");

    auto* gc = app.add_subcommand("gradcheck", "run the finite-difference suite");
    int gc_seeds = 20;
    double gc_eps = 1e-5;
    gc->add_option("--seeds", gc_seeds, "number of random seeds");
    gc->add_option("--eps", gc_eps, "finite-difference step");

    auto* anc = app.add_subcommand("anchors", "dump the materialised default boxes");
    std::string anc_cfg, anc_out;
    bool anc_full = false;
    anc->add_option("--config", anc_cfg, "config json");
    anc->add_flag("--full-scale", anc_full, "use the 704-px seven-layer geometry");
    anc->add_option("--out", anc_out, "write the dump to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_out, gen_count, gen_seed, gen_size);
        if (train->parsed())
            return cmd_train(train_cfg, train_data, train_steps, train_seed, train_out, train_log);
        if (det->parsed())
            return cmd_detect(det_weights, det_image, det_cfg, det_conf, det_nms, det_out, det_att,
                              det_overlay);
        if (ev->parsed()) return cmd_eval(ev_det, ev_gt, ev_iou, ev_rot, ev_report);
        if (gc->parsed()) {
            const bool ok = run_gradcheck_suite(gc_seeds, gc_eps, std::cout);
            return ok ? 0 : 1;
        }
        if (anc->parsed()) return cmd_anchors(anc_cfg, anc_full, anc_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what();
        if (e.byte_offset() >= 0) std::cerr << " (byte offset " << e.byte_offset() << ")";
        std::cerr << "\n";
        return e.kind() == ErrorKind::io ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
