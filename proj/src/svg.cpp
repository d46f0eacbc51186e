#include "mergesim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mergesim {

namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 480.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 150.0;  // legend gutter
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 50.0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Round a range outward to tidy tick steps.
double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  double raw = span / 6.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

}  // namespace

LinePlot::LinePlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void LinePlot::add_series(const std::string& name, std::span<const Vec2> pts,
                          const std::string& color, bool dashed) {
  series_.push_back({name, {pts.begin(), pts.end()}, color, dashed});
}

void LinePlot::add_band(double x0, double x1, const std::string& color) {
  bands_.push_back({x0, x1, color});
}

std::string LinePlot::render() const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series_)
    for (const auto& p : s.pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  if (!(xmin < xmax)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (!(ymin < ymax)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double plot_w = kWidth - kMarginL - kMarginR;
  const double plot_h = kHeight - kMarginT - kMarginB;
  auto px = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kMarginT + (ymax - y) / (ymax - ymin) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (const auto& b : bands_) {
    double x0 = std::clamp(b.x0, xmin, xmax);
    double x1 = std::clamp(b.x1, xmin, xmax);
    if (x1 > x0)
      svg << "<rect x=\"" << num(px(x0)) << "\" y=\"" << num(kMarginT) << "\" width=\""
          << num(px(x1) - px(x0)) << "\" height=\"" << num(plot_h) << "\" fill=\""
          << b.color << "\" opacity=\"0.25\"/>\n";
  }

  // Axes and grid.
  svg << "<rect x=\"" << num(kMarginL) << "\" y=\"" << num(kMarginT) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  double xstep = nice_step(xmax - xmin);
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
    svg << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(kMarginT) << "\" x2=\""
        << num(px(x)) << "\" y2=\"" << num(kMarginT + plot_h)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << num(px(x)) << "\" y=\"" << num(kMarginT + plot_h + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(x) << "</text>\n";
  }
  double ystep = nice_step(ymax - ymin);
  for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
    svg << "<line x1=\"" << num(kMarginL) << "\" y1=\"" << num(py(y)) << "\" x2=\""
        << num(kMarginL + plot_w) << "\" y2=\"" << num(py(y))
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << num(kMarginL - 8) << "\" y=\"" << num(py(y) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(y) << "</text>\n";
  }

  for (const auto& s : series_) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " points=\"";
    for (const auto& p : s.pts) svg << num(px(p.x)) << ',' << num(py(p.y)) << ' ';
    svg << "\"/>\n";
  }

  // Legend.
  double ly = kMarginT + 10.0;
  for (const auto& s : series_) {
    double lx = kMarginL + plot_w + 12.0;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << "/>\n";
    svg << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4)
        << "\" font-size=\"11\">" << s.name << "</text>\n";
    ly += 18.0;
  }

  svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" font-size=\"14\" "
         "text-anchor=\"middle\">"
      << title_ << "</text>\n";
  svg << "<text x=\"" << num(kMarginL + plot_w / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label_ << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(kMarginT + plot_h / 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kMarginT + plot_h / 2) << ")\">" << y_label_ << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void LinePlot::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write SVG file '" + path + "'");
  out << render();
}

}  // namespace mergesim
