#include "glmtensor/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glmtensor/errors.hpp"
#include "glmtensor/format.hpp"

namespace glmtensor {

namespace {

// 8-stop dark-blue -> yellow ramp, linearly interpolated.
const int kRamp[8][3] = {{13, 8, 135},    {84, 2, 163},   {139, 10, 165}, {185, 50, 137},
                         {219, 92, 104},  {244, 136, 73}, {254, 188, 43}, {240, 249, 33}};

std::string ramp_color(double t) {
  t = std::min(std::max(t, 0.0), 1.0);
  const double pos = t * 7.0;
  const int lo = std::min(static_cast<int>(pos), 6);
  const double frac = pos - lo;
  std::ostringstream oss;
  oss << "rgb(";
  for (int c = 0; c < 3; ++c) {
    const int v = static_cast<int>(std::lround(kRamp[lo][c] + frac * (kRamp[lo + 1][c] - kRamp[lo][c])));
    oss << (c ? "," : "") << v;
  }
  oss << ")";
  return oss.str();
}

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  double px0 = 0.0, px1 = 1.0;
  double map(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

void axis_range(const std::vector<double>& v, double& lo, double& hi) {
  lo = HUGE_VAL;
  hi = -HUGE_VAL;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string svg_header(int w, int h, const std::string& title, const std::string& hash) {
  std::ostringstream oss;
  oss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<!-- config_hash: " << hash << " -->\n"
      << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << title << "</text>\n";
  return oss.str();
}

void draw_axes(std::ostringstream& oss, const AxisScale& xs, const AxisScale& ys,
               const std::string& x_label, const std::string& y_label) {
  oss << "<line x1=\"" << xs.px0 << "\" y1=\"" << ys.px1 << "\" x2=\"" << xs.px1 << "\" y2=\""
      << ys.px1 << "\" stroke=\"black\"/>\n";
  oss << "<line x1=\"" << xs.px0 << "\" y1=\"" << ys.px0 << "\" x2=\"" << xs.px0 << "\" y2=\""
      << ys.px1 << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xs.lo + (xs.hi - xs.lo) * k / 5.0;
    const double yv = ys.lo + (ys.hi - ys.lo) * k / 5.0;
    const double xp = xs.map(xv), yp = ys.map(yv);
    oss << "<line x1=\"" << xp << "\" y1=\"" << ys.px1 << "\" x2=\"" << xp << "\" y2=\""
        << ys.px1 + 5 << "\" stroke=\"black\"/>\n";
    oss << "<text x=\"" << xp << "\" y=\"" << ys.px1 + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">";
    char buf[32];
    snprintf(buf, sizeof(buf), "%.4g", xv);
    oss << buf << "</text>\n";
    oss << "<line x1=\"" << xs.px0 - 5 << "\" y1=\"" << yp << "\" x2=\"" << xs.px0 << "\" y2=\""
        << yp << "\" stroke=\"black\"/>\n";
    snprintf(buf, sizeof(buf), "%.4g", yv);
    oss << "<text x=\"" << xs.px0 - 8 << "\" y=\"" << yp + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  oss << "<text x=\"" << (xs.px0 + xs.px1) / 2 << "\" y=\"" << ys.px1 + 40
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
  oss << "<text x=\"18\" y=\"" << (ys.px0 + ys.px1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << (ys.px0 + ys.px1) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

std::string sweep_csv(const std::vector<PhasePoint>& points, const std::string& config_hash) {
  std::ostringstream oss;
  oss << "# config_hash: " << config_hash << "\n";
  oss << "lambda,alpha,q_x,q_s,r_s,psi,mmse,near_degenerate\n";
  for (const PhasePoint& p : points) {
    oss << format_double(p.lambda) << ',' << format_double(p.alpha) << ','
        << format_double(p.q_x) << ',' << format_double(p.q_s) << ',' << format_double(p.r_s)
        << ',' << format_double(p.psi) << ',' << format_double(p.mmse) << ','
        << (p.near_degenerate ? 1 : 0) << '\n';
  }
  return oss.str();
}

std::string limit_csv(const std::vector<LimitPoint>& points, const std::string& config_hash) {
  std::ostringstream oss;
  oss << "# config_hash: " << config_hash << "\n";
  oss << "lambda,q_x,mmse\n";
  for (const LimitPoint& p : points)
    oss << format_double(p.lambda) << ',' << format_double(p.q_x) << ','
        << format_double(p.mmse) << '\n';
  return oss.str();
}

std::string oracle_csv(double lambda, int n, int p, const McEstimate& mi,
                       const McEstimate& mmse, const std::string& config_hash) {
  std::ostringstream oss;
  oss << "# config_hash: " << config_hash << "\n";
  oss << "lambda,n,p,mi_est,mi_se,mmse_est,mmse_se\n";
  oss << format_double(lambda) << ',' << n << ',' << p << ',' << format_double(mi.estimate)
      << ',' << format_double(mi.std_error) << ',' << format_double(mmse.estimate) << ','
      << format_double(mmse.std_error) << '\n';
  return oss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_argument("cannot open output file " + path);
  out << content;
  if (!out) throw invalid_argument("failed writing output file " + path);
}

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& x_label,
                           const std::string& y_label, const std::string& title,
                           const std::string& config_hash) {
  const int W = 640, H = 480;
  std::vector<double> all_x, all_y;
  for (const SvgSeries& s : series) {
    all_x.insert(all_x.end(), s.x.begin(), s.x.end());
    all_y.insert(all_y.end(), s.y.begin(), s.y.end());
  }
  AxisScale xs, ys;
  axis_range(all_x, xs.lo, xs.hi);
  axis_range(all_y, ys.lo, ys.hi);
  xs.px0 = 70;
  xs.px1 = W - 30;
  ys.px0 = 40;   // top
  ys.px1 = H - 60;  // bottom
  // y grows downward in SVG
  std::ostringstream oss;
  oss << svg_header(W, H, title, config_hash);
  AxisScale ys_flipped = ys;
  ys_flipped.px0 = ys.px1;
  ys_flipped.px1 = ys.px0;
  draw_axes(oss, xs, ys, x_label, y_label);
  int legend_y = 50;
  for (const SvgSeries& s : series) {
    oss << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      oss << xs.map(s.x[i]) << ',' << ys_flipped.map(s.y[i]) << ' ';
    oss << "\"/>\n";
    if (!s.label.empty()) {
      oss << "<line x1=\"" << W - 180 << "\" y1=\"" << legend_y << "\" x2=\"" << W - 160
          << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
      oss << "<text x=\"" << W - 154 << "\" y=\"" << legend_y + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
      legend_y += 18;
    }
  }
  oss << "</svg>\n";
  return oss.str();
}

std::string svg_heatmap(const std::vector<double>& values, std::size_t rows, std::size_t cols,
                        const std::vector<double>& row_coords,
                        const std::vector<double>& col_coords, const std::string& x_label,
                        const std::string& y_label, const std::string& title,
                        const std::string& config_hash) {
  if (values.size() != rows * cols || row_coords.size() != rows || col_coords.size() != cols)
    throw invalid_argument("svg_heatmap: shape mismatch");
  const int W = 680, H = 520;
  const double px0 = 70, px1 = W - 90, py0 = 40, py1 = H - 60;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;
  std::ostringstream oss;
  oss << svg_header(W, H, title, config_hash);
  const double cw = (px1 - px0) / cols, ch = (py1 - py0) / rows;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      // rows are drawn bottom-up so the first row sits at the axis origin
      const double x = px0 + c * cw;
      const double y = py1 - (r + 1) * ch;
      oss << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw + 0.5 << "\" height=\""
          << ch + 0.5 << "\" fill=\"" << ramp_color((v - lo) / (hi - lo)) << "\"/>\n";
    }
  }
  AxisScale xs{col_coords.front(), col_coords.back(), px0, px1};
  AxisScale ys{row_coords.front(), row_coords.back(), py0, py1};
  if (!(xs.hi > xs.lo)) xs.hi = xs.lo + 1;
  if (!(ys.hi > ys.lo)) ys.hi = ys.lo + 1;
  draw_axes(oss, xs, ys, x_label, y_label);
  // color bar
  for (int k = 0; k < 100; ++k) {
    const double y = py1 - (py1 - py0) * (k + 1) / 100.0;
    oss << "<rect x=\"" << px1 + 20 << "\" y=\"" << y << "\" width=\"16\" height=\""
        << (py1 - py0) / 100.0 + 0.5 << "\" fill=\"" << ramp_color(k / 99.0) << "\"/>\n";
  }
  char buf[32];
  snprintf(buf, sizeof(buf), "%.4g", lo);
  oss << "<text x=\"" << px1 + 40 << "\" y=\"" << py1 + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf << "</text>\n";
  snprintf(buf, sizeof(buf), "%.4g", hi);
  oss << "<text x=\"" << px1 + 40 << "\" y=\"" << py0 + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf << "</text>\n";
  oss << "</svg>\n";
  return oss.str();
}

}  // namespace glmtensor
