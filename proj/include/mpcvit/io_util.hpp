#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mpcvit/runtime.hpp"

namespace mpcvit {

// Write a CSV file with a header row; no quoting (callers keep fields plain).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Meter dump: op, bytes_p0, bytes_p1, rounds (one row per op kind).
void write_meter_csv(const CommMeter& meter, const std::string& path);

// Minimal hand-rolled SVG charts (no dependencies).
void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& values,
                    const std::string& y_label);

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (x, y), drawn in order
};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series);

// Stage manifests make multi-stage runs restartable: a stage that finished
// writes manifest_<stage>.json; reruns with resume=true skip it.
void write_manifest(const std::string& out_dir, const std::string& stage,
                    const std::vector<std::string>& outputs, const nlohmann::json& config);
bool stage_complete(const std::string& out_dir, const std::string& stage);

}  // namespace mpcvit
