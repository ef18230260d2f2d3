#include "mpcvit/data.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "mpcvit/errors.hpp"

namespace mpcvit {

namespace {

constexpr double kFg = 0.9;   // foreground intensity
constexpr double kBg = -0.9;  // background intensity

// Draw one shape family onto a bg-filled image. Geometry jitters with rng but
// stays well inside the frame so 4x4 patches still see the structure.
void draw_shape(Mat& img, int cls, std::mt19937_64& rng) {
    int n = int(img.rows);
    auto set = [&](int i, int j) {
        if (i >= 0 && i < n && j >= 0 && j < n) img.at(std::size_t(i), std::size_t(j)) = kFg;
    };
    std::uniform_int_distribution<int> pos(1, n - 2);
    std::uniform_int_distribution<int> thick(1, 2);
    switch (cls) {
        case 0: {  // horizontal bar
            int r = pos(rng), t = thick(rng);
            for (int dt = 0; dt < t; ++dt)
                for (int j = 0; j < n; ++j) set(r + dt, j);
            break;
        }
        case 1: {  // vertical bar
            int cpos = pos(rng), t = thick(rng);
            for (int dt = 0; dt < t; ++dt)
                for (int i = 0; i < n; ++i) set(i, cpos + dt);
            break;
        }
        case 2: {  // cross
            int r = pos(rng), cpos = pos(rng);
            for (int j = 0; j < n; ++j) set(r, j);
            for (int i = 0; i < n; ++i) set(i, cpos);
            break;
        }
        case 3: {  // gaussian blob
            std::uniform_real_distribution<double> center(n * 0.3, n * 0.7);
            double ci = center(rng), cj = center(rng);
            double s2 = 2.0 * (n / 5.0) * (n / 5.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double d2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
                    double v = kBg + (kFg - kBg) * std::exp(-d2 / s2);
                    img.at(std::size_t(i), std::size_t(j)) = v;
                }
            break;
        }
        case 4: {  // main diagonal band
            int off = std::uniform_int_distribution<int>(-1, 1)(rng);
            for (int i = 0; i < n; ++i) {
                set(i, i + off);
                set(i, i + off + 1);
            }
            break;
        }
        case 5: {  // anti-diagonal band
            int off = std::uniform_int_distribution<int>(-1, 1)(rng);
            for (int i = 0; i < n; ++i) {
                set(i, n - 1 - i + off);
                set(i, n - 2 - i + off);
            }
            break;
        }
        case 6: {  // box outline
            int m = std::uniform_int_distribution<int>(0, std::max(0, n / 4 - 1))(rng);
            for (int j = m; j < n - m; ++j) {
                set(m, j);
                set(n - 1 - m, j);
            }
            for (int i = m; i < n - m; ++i) {
                set(i, m);
                set(i, n - 1 - m);
            }
            break;
        }
        case 7: {  // two dots in opposite quadrants
            int q = n / 4;
            int i1 = q + std::uniform_int_distribution<int>(-1, 1)(rng);
            int j1 = q + std::uniform_int_distribution<int>(-1, 1)(rng);
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj) {
                    set(i1 + di, j1 + dj);
                    set(n - 2 - q + di, n - 2 - q + dj);
                }
            break;
        }
        case 8: {  // checkerboard, 2x2 cells
            int phase = std::uniform_int_distribution<int>(0, 1)(rng);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (((i / 2 + j / 2) % 2) == phase) set(i, j);
            break;
        }
        case 9: {  // filled center square
            int m = n / 4;
            for (int i = m; i < n - m; ++i)
                for (int j = m; j < n - m; ++j) set(i, j);
            break;
        }
        default: throw ConfigError("shape class out of range");
    }
}

}  // namespace

Dataset synth_shapes(std::size_t n, int image_size, int classes, u64 seed, double noise) {
    if (classes < 2 || classes > 10) throw ConfigError("synth_shapes supports 2..10 classes");
    if (image_size < 8) throw ConfigError("synth_shapes needs image_size >= 8");
    Dataset ds;
    ds.h = ds.w = image_size;
    ds.c = 1;
    ds.classes = classes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, noise);
    for (std::size_t i = 0; i < n; ++i) {
        int cls = int(i % std::size_t(classes));
        Mat img(static_cast<std::size_t>(image_size), static_cast<std::size_t>(image_size));
        for (double& v : img.d) v = kBg;
        draw_shape(img, cls, rng);
        for (double& v : img.d) v = std::clamp(v + jitter(rng), -1.0, 1.0);
        ds.images.push_back(std::move(img));
        ds.labels.push_back(cls);
    }
    return ds;
}

void save_dataset_raw(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open dataset for writing: " + path);
    f << "MPCVIT-RAW1 " << ds.size() << " " << ds.h << " " << ds.w << " " << ds.c << " "
      << ds.classes << "\n";
    std::vector<float> px;
    px.reserve(std::size_t(ds.h) * std::size_t(ds.w * ds.c));
    for (const Mat& img : ds.images) {
        px.assign(img.d.begin(), img.d.end());
        f.write(reinterpret_cast<const char*>(px.data()),
                std::streamsize(px.size() * sizeof(float)));
    }
    std::vector<std::int32_t> lab(ds.labels.begin(), ds.labels.end());
    f.write(reinterpret_cast<const char*>(lab.data()),
            std::streamsize(lab.size() * sizeof(std::int32_t)));
    if (!f) throw std::runtime_error("dataset write failed: " + path);
}

Dataset load_dataset_raw(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(f, line)) throw CorruptFile("missing dataset header: " + path);
    std::istringstream hs(line);
    std::string magic;
    long long n = -1;
    Dataset ds;
    hs >> magic >> n >> ds.h >> ds.w >> ds.c >> ds.classes;
    if (magic != "MPCVIT-RAW1" || hs.fail())
        throw CorruptFile("bad dataset header: " + path);
    if (n < 0 || ds.h <= 0 || ds.w <= 0 || ds.c <= 0 || ds.classes < 2)
        throw CorruptFile("dataset header fields out of range: " + path);
    std::size_t per = std::size_t(ds.h) * std::size_t(ds.w) * std::size_t(ds.c);
    std::vector<float> px(per);
    for (long long i = 0; i < n; ++i) {
        f.read(reinterpret_cast<char*>(px.data()), std::streamsize(per * sizeof(float)));
        if (!f) throw CorruptFile("truncated dataset pixels: " + path);
        Mat img(std::size_t(ds.h), std::size_t(ds.w) * std::size_t(ds.c));
        for (std::size_t k = 0; k < per; ++k) img.d[k] = double(px[k]);
        ds.images.push_back(std::move(img));
    }
    std::vector<std::int32_t> lab(static_cast<std::size_t>(n));
    f.read(reinterpret_cast<char*>(lab.data()),
           std::streamsize(lab.size() * sizeof(std::int32_t)));
    if (!f) throw CorruptFile("truncated dataset labels: " + path);
    for (std::int32_t v : lab) {
        if (v < 0 || v >= ds.classes) throw CorruptFile("dataset label out of range: " + path);
        ds.labels.push_back(int(v));
    }
    return ds;
}

}  // namespace mpcvit
