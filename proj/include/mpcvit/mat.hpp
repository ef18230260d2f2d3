#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mpcvit/errors.hpp"

namespace mpcvit {

// Minimal row-major double matrix for plaintext reference computation.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return d[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return d[i * cols + j]; }

    static Mat randn(std::size_t r, std::size_t c, std::mt19937_64& rng, double stddev = 1.0) {
        Mat m(r, c);
        std::normal_distribution<double> dist(0.0, stddev);
        for (double& v : m.d) v = dist(rng);
        return m;
    }
};

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw ShapeError("matmul shape mismatch");
    Mat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double av = a.at(i, k);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j)
                out.at(i, j) += av * b.at(k, j);
        }
    return out;
}

inline Mat transposed(const Mat& a) {
    Mat out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

inline Mat scaled(const Mat& a, double s) {
    Mat out = a;
    for (double& v : out.d) v *= s;
    return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.d.size(); ++i)
        m = std::max(m, std::abs(a.d[i] - b.d[i]));
    return m;
}

}  // namespace mpcvit
