#pragma once

#include <string>
#include <vector>

#include "mpcvit/mat.hpp"
#include "mpcvit/ring.hpp"

namespace mpcvit {

// In-memory dataset: grayscale images in [-1, 1], integer labels.
struct Dataset {
    int h = 0, w = 0, c = 1, classes = 0;
    std::vector<Mat> images;  // rows = h, cols = w * c
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
};

// Deterministic synthetic shape classifier task. Classes cycle through up to
// ten shape families (bars, cross, blob, diagonals, box, dots, checker,
// fill); labels are uniform by construction (i % classes).
Dataset synth_shapes(std::size_t n, int image_size, int classes, u64 seed,
                     double noise = 0.08);

// Raw dataset file: one text header line
//   MPCVIT-RAW1 <n> <h> <w> <c> <classes>\n
// followed by n*h*w*c float32 pixels and n int32 labels, little endian.
void save_dataset_raw(const Dataset& ds, const std::string& path);
Dataset load_dataset_raw(const std::string& path);

}  // namespace mpcvit
