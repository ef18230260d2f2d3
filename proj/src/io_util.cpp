#include "mpcvit/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mpcvit {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        f << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            f << row[i] << (i + 1 < row.size() ? "," : "\n");
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_meter_csv(const CommMeter& meter, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [op, r] : meter.rows)
        rows.push_back({op, std::to_string(r.bytes_p0), std::to_string(r.bytes_p1),
                        std::to_string(r.rounds)});
    write_csv(path, {"op", "bytes_p0", "bytes_p1", "rounds"}, rows);
}

namespace {

constexpr int kW = 720, kH = 440;
constexpr int kMarginL = 70, kMarginR = 30, kMarginT = 50, kMarginB = 70;

std::string svg_header(const std::string& title) {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";
    return o.str();
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& values,
                    const std::string& y_label) {
    if (labels.size() != values.size()) throw std::runtime_error("bar chart label/value mismatch");
    double vmax = 1e-12;
    for (double v : values) vmax = std::max(vmax, v);
    std::ostringstream o;
    o << svg_header(title);
    int plot_w = kW - kMarginL - kMarginR, plot_h = kH - kMarginT - kMarginB;
    double bw = double(plot_w) / double(std::max<std::size_t>(values.size(), 1));
    for (std::size_t i = 0; i < values.size(); ++i) {
        double h = values[i] / vmax * plot_h;
        double x = kMarginL + double(i) * bw + bw * 0.15;
        double y = kMarginT + (plot_h - h);
        o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bw * 0.7
          << "\" height=\"" << h << "\" fill=\"" << kColors[i % 6] << "\"/>\n";
        o << "<text x=\"" << x + bw * 0.35 << "\" y=\"" << y - 5
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
          << values[i] << "</text>\n";
        o << "<text x=\"" << x + bw * 0.35 << "\" y=\"" << kMarginT + plot_h + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" "
          << "transform=\"rotate(20 " << x + bw * 0.35 << " " << kMarginT + plot_h + 18
          << ")\">" << labels[i] << "</text>\n";
    }
    o << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT + plot_h << "\" x2=\""
      << kW - kMarginR << "\" y2=\"" << kMarginT + plot_h << "\" stroke=\"black\"/>\n";
    o << "<text x=\"18\" y=\"" << kMarginT + plot_h / 2
      << "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 18 "
      << kMarginT + plot_h / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
    o << "</svg>\n";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << o.str();
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-12) { xmax = xmin + 1; }
    if (ymax - ymin < 1e-12) { ymax = ymin + 1; }
    double xpad = 0.05 * (xmax - xmin), ypad = 0.08 * (ymax - ymin);
    xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

    int plot_w = kW - kMarginL - kMarginR, plot_h = kH - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return kMarginT + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

    std::ostringstream o;
    o << svg_header(title);
    o << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT + plot_h << "\" x2=\""
      << kW - kMarginR << "\" y2=\"" << kMarginT + plot_h << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
      << "\" y2=\"" << kMarginT + plot_h << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        double xv = xmin + (xmax - xmin) * tick / 4.0;
        double yv = ymin + (ymax - ymin) * tick / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << kMarginT + plot_h + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
          << std::round(xv * 1000.0) / 1000.0 << "</text>\n";
        o << "<text x=\"" << kMarginL - 8 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
          << std::round(yv * 1000.0) / 1000.0 << "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kColors[si % 6];
        std::ostringstream pl;
        for (auto [x, y] : series[si].points) pl << px(x) << "," << py(y) << " ";
        o << "<polyline points=\"" << pl.str() << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        for (auto [x, y] : series[si].points)
            o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\""
              << color << "\"/>\n";
        o << "<text x=\"" << kW - kMarginR - 8 << "\" y=\"" << kMarginT + 18 + 16 * double(si)
          << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
          << color << "\">" << series[si].name << "</text>\n";
    }
    o << "<text x=\"" << kMarginL + plot_w / 2 << "\" y=\"" << kH - 16
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
      << "</text>\n";
    o << "<text x=\"18\" y=\"" << kMarginT + plot_h / 2
      << "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 18 "
      << kMarginT + plot_h / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
    o << "</svg>\n";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << o.str();
}

void write_manifest(const std::string& out_dir, const std::string& stage,
                    const std::vector<std::string>& outputs, const json& config) {
    json j;
    j["stage"] = stage;
    j["status"] = "complete";
    j["outputs"] = outputs;
    j["config"] = config;
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / ("manifest_" + stage + ".json"), std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write manifest for stage " + stage);
    f << j.dump(2) << "\n";
}

bool stage_complete(const std::string& out_dir, const std::string& stage) {
    fs::path p = fs::path(out_dir) / ("manifest_" + stage + ".json");
    std::ifstream f(p);
    if (!f) return false;
    try {
        json j;
        f >> j;
        return j.value("status", "") == "complete";
    } catch (const json::exception&) {
        return false;
    }
}

}  // namespace mpcvit
