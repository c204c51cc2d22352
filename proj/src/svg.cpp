// SPDX-License-Identifier: Apache-2.0
#include <piann/svg.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace piann::svg {

namespace {

constexpr double kWidth = 800, kHeight = 600;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream &out) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

} // namespace

std::string line_chart(const std::vector<Series> &series, const ChartOptions &options) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto ty = [&](double y) { return options.log_y ? std::log10(std::max(y, 1e-300)) : y; };
  for (const auto &s : series)
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]))
        continue;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, ty(s.y[k]));
      ymax = std::max(ymax, ty(s.y[k]));
    }
  if (!(xmax > xmin)) {
    xmin = 0;
    xmax = 1;
  }
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream out;
  open_svg(out);
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(options.title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xv << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + (1.0 - k / 4.0) * ph + 4
        << "\" text-anchor=\"end\" font-size=\"11\">"
        << (options.log_y ? "1e" : "") << yv << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(options.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">" << escape(options.y_label)
      << "</text>\n";

  double legend_y = kTop + 16;
  for (const auto &s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k]))
        out << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << kLeft + pw - 8 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color << "\">"
        << escape(s.label) << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap(const Tensor &matrix, const std::string &title, bool normalize) {
  const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
  double top = 1.0;
  if (normalize) {
    top = 0.0;
    for (double v : matrix.storage())
      top = std::max(top, v);
    if (!(top > 0.0))
      top = 1.0;
  }
  const double size = std::min(kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  const double cw = size / static_cast<double>(cols), ch = size / static_cast<double>(rows);
  std::ostringstream out;
  open_svg(out);
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = std::clamp(matrix.at(r, c) / top, 0.0, 1.0);
      const int red = static_cast<int>(std::lround(255 + (8 - 255) * v));
      const int green = static_cast<int>(std::lround(255 + (48 - 255) * v));
      const int blue = static_cast<int>(std::lround(255 + (107 - 255) * v));
      out << "<rect x=\"" << kLeft + c * cw << "\" y=\"" << kTop + r * ch << "\" width=\""
          << cw << "\" height=\"" << ch << "\" fill=\"rgb(" << red << ',' << green << ','
          << blue << ")\"/>\n";
    }
  out << "<text x=\"" << kLeft + size / 2 << "\" y=\"" << kTop + size + 20
      << "\" text-anchor=\"middle\" font-size=\"13\">encoder position j</text>\n";
  out << "<text x=\"" << kLeft - 10 << "\" y=\"" << kTop + size / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 " << kLeft - 10
      << ' ' << kTop + size / 2 << ")\">output position i</text>\n";
  out << "</svg>\n";
  return out.str();
}

} // namespace piann::svg
