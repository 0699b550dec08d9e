#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glmtensor/observables.hpp"
#include "glmtensor/oracle.hpp"

namespace glmtensor {

/// CSV with a `# config_hash: <hex>` comment line, a mandatory header,
/// comma-separated fields, LF line endings and shortest round-trip floats.
std::string sweep_csv(const std::vector<PhasePoint>& points, const std::string& config_hash);
std::string limit_csv(const std::vector<LimitPoint>& points, const std::string& config_hash);
std::string oracle_csv(double lambda, int n, int p, const McEstimate& mi,
                       const McEstimate& mmse, const std::string& config_hash);

void write_text_file(const std::string& path, const std::string& content);

struct SvgSeries {
  std::string label;
  std::string color;  // CSS color
  std::vector<double> x, y;
};

/// Minimal static line chart (axes, ticks, one polyline per series).
std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& x_label,
                           const std::string& y_label, const std::string& title,
                           const std::string& config_hash);

/// Heatmap over a (rows x cols) value matrix with the documented 8-stop
/// blue-to-yellow ramp, row/column coordinates on the axes.
std::string svg_heatmap(const std::vector<double>& values, std::size_t rows, std::size_t cols,
                        const std::vector<double>& row_coords,
                        const std::vector<double>& col_coords, const std::string& x_label,
                        const std::string& y_label, const std::string& title,
                        const std::string& config_hash);

}  // namespace glmtensor
