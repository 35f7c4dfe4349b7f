#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cutflow {

// Minimal static SVG output: enough for a log-log survival curve, a variance
// scan, and a covariance heatmap. No styling knobs beyond what the reports need.

namespace detail {
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}
}  // namespace detail

inline void write_line_plot_svg(std::ostream& os, const std::vector<double>& xs,
                                const std::vector<double>& ys, const std::string& title,
                                const std::string& x_label, const std::string& y_label,
                                bool log_x = false, bool log_y = false) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("write_line_plot_svg: need >= 2 matching points");
    const int width = 640, height = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    std::vector<double> px(xs.size()), py(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        px[i] = log_x ? std::log10(xs[i]) : xs[i];
        py[i] = log_y ? std::log10(ys[i]) : ys[i];
        if (!std::isfinite(px[i]) || !std::isfinite(py[i]))
            throw std::invalid_argument("write_line_plot_svg: non-finite point (log of <= 0?)");
    }
    const auto [xmin_it, xmax_it] = std::minmax_element(px.begin(), px.end());
    const auto [ymin_it, ymax_it] = std::minmax_element(py.begin(), py.end());
    double xmin = *xmin_it, xmax = *xmax_it, ymin = *ymin_it, ymax = *ymax_it;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto sy = [&](double v) { return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        os << "<text x=\"" << detail::fmt(sx(xv)) << "\" y=\"" << height - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::fmt(xv) << "</text>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << detail::fmt(sy(yv) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << detail::fmt(yv) << "</text>\n";
    }
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label
       << (log_x ? " (log10)" : "") << "</text>\n";
    os << "<text x=\"16\" y=\"" << height / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
       << "transform=\"rotate(-90 16 " << height / 2 << ")\">" << y_label
       << (log_y ? " (log10)" : "") << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < px.size(); ++i)
        os << detail::fmt(sx(px[i])) << "," << detail::fmt(sy(py[i])) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < px.size(); ++i)
        os << "<circle cx=\"" << detail::fmt(sx(px[i])) << "\" cy=\"" << detail::fmt(sy(py[i]))
           << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    os << "</svg>\n";
}

inline void write_heatmap_svg(std::ostream& os, const std::vector<double>& matrix, int rows,
                              int cols, const std::string& title) {
    if (static_cast<int>(matrix.size()) != rows * cols)
        throw std::invalid_argument("write_heatmap_svg: matrix size mismatch");
    const int cell = std::max(16, 360 / std::max(rows, cols));
    const int ml = 50, mt = 50;
    const int width = ml + cols * cell + 20, height = mt + rows * cell + 20;
    double lo = matrix[0], hi = matrix[0];
    for (double v : matrix) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double t = (matrix[i * cols + j] - lo) / (hi - lo);
            // blue (low) through white to red (high)
            const int r = static_cast<int>(255 * std::min(1.0, 2.0 * t));
            const int b = static_cast<int>(255 * std::min(1.0, 2.0 * (1.0 - t)));
            const int g = std::min(r, b);
            os << "<rect x=\"" << ml + j * cell << "\" y=\"" << mt + i * cell << "\" width=\""
               << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << r << "," << g << "," << b
               << ")\" stroke=\"#ccc\"/>\n";
        }
    os << "<text x=\"" << ml << "\" y=\"" << height - 6 << "\" font-size=\"11\">min "
       << detail::fmt(lo) << ", max " << detail::fmt(hi) << "</text>\n";
    os << "</svg>\n";
}

}  // namespace cutflow
