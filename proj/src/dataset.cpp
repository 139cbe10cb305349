#include "sstd/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sstd/image_io.hpp"

namespace fs = std::filesystem;

namespace sstd {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

std::string format_box_line(const OrientedBox& b) {
    return fmt(b.cx) + " " + fmt(b.cy) + " " + fmt(b.w) + " " + fmt(b.h) + " " + fmt(b.theta);
}

std::string format_detection_line(const Detection& d) {
    return format_box_line(d.box) + " " + fmt(d.score);
}

Detection parse_box_line(const std::string& line, const std::string& context) {
    std::istringstream in(line);
    std::vector<double> fields;
    double v;
    while (in >> v) fields.push_back(v);
    require(fields.size() == 5 || fields.size() == 6,
            context + ": expected 5 or 6 fields, got " + std::to_string(fields.size()) +
                " in line '" + line + "'");
    Detection det;
    det.box = {fields[0], fields[1], fields[2], fields[3], fields[4]};
    require(det.box.w > 0 && det.box.h > 0, context + ": non-positive box size in '" + line + "'");
    det.score = fields.size() == 6 ? fields[5] : 1.0;
    return det;
}

std::string format_corners_line(const OrientedBox& box) {
    const auto c = box_corners(box);
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (i) out += " ";
        out += fmt(c[i][0]) + " " + fmt(c[i][1]);
    }
    return out;
}

void write_boxes(const std::vector<OrientedBox>& boxes, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail_io("cannot write '" + path + "'");
    for (const auto& b : boxes) out << format_box_line(b) << "\n";
}

std::vector<OrientedBox> read_boxes(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open '" + path + "'");
    std::vector<OrientedBox> boxes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        boxes.push_back(parse_box_line(line, path).box);
    }
    return boxes;
}

void write_detections(const std::vector<Detection>& dets, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail_io("cannot write '" + path + "'");
    for (const auto& d : dets) out << format_detection_line(d) << "\n";
}

std::vector<Detection> read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open '" + path + "'");
    std::vector<Detection> dets;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        dets.push_back(parse_box_line(line, path));
    }
    return dets;
}

std::string sample_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", index);
    return buf;
}

void write_dataset(const std::vector<SceneSample>& samples, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail_io("cannot create dataset directory '" + dir + "': " + ec.message());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string stem = (fs::path(dir) / sample_stem(static_cast<int>(i))).string();
        write_ppm(samples[i].image, stem + ".ppm");
        write_boxes(samples[i].boxes, stem + ".boxes.txt");
        write_pgm(samples[i].mask, stem + ".mask.pgm");
    }
}

std::vector<SceneSample> load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) fail_io("dataset directory '" + dir + "' does not exist");
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".ppm") images.push_back(entry.path());
    std::sort(images.begin(), images.end());
    require(!images.empty(), "dataset directory '" + dir + "' contains no .ppm images");

    std::vector<SceneSample> samples;
    samples.reserve(images.size());
    for (const fs::path& img : images) {
        SceneSample s;
        s.image = read_ppm(img.string());
        fs::path stem = img;
        stem.replace_extension();
        s.boxes = read_boxes(stem.string() + ".boxes.txt");
        s.mask = read_pgm(stem.string() + ".mask.pgm");
        require(s.mask.h == s.image.h && s.mask.w == s.image.w,
                "dataset sample '" + stem.string() + "': mask/image size mismatch");
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace sstd
