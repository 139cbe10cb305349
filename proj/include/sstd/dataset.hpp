#pragma once

#include <string>
#include <vector>

#include "sstd/geometry.hpp"
#include "sstd/scene.hpp"

namespace sstd {

// Directory layout: NNNN.ppm / NNNN.boxes.txt / NNNN.mask.pgm per sample;
// detections go to NNNN.det.txt. Box lines are `cx cy w h theta [score]`.

std::string format_box_line(const OrientedBox& box);
std::string format_detection_line(const Detection& det);

// Expects 5 or 6 decimal fields; the 6th, when present, is the score.
Detection parse_box_line(const std::string& line, const std::string& context);

// ICDAR-style clockwise 4-corner form: x1 y1 x2 y2 x3 y3 x4 y4
std::string format_corners_line(const OrientedBox& box);

void write_boxes(const std::vector<OrientedBox>& boxes, const std::string& path);
std::vector<OrientedBox> read_boxes(const std::string& path);

void write_detections(const std::vector<Detection>& dets, const std::string& path);
std::vector<Detection> read_detections(const std::string& path);

std::string sample_stem(int index); // zero-padded 4 digits

void write_dataset(const std::vector<SceneSample>& samples, const std::string& dir);
std::vector<SceneSample> load_dataset(const std::string& dir);

} // namespace sstd
