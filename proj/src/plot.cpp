// SPDX-License-Identifier: Apache-2.0
#include "bdpo/plot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "bdpo/errors.hpp"

namespace bdpo {

namespace {

constexpr double kPanel = 320.0;   // drawable square per panel
constexpr double kMargin = 40.0;

struct Mapper {
    double lo, hi, x0, y0;
    double px(double x) const { return x0 + (x - lo) / (hi - lo) * kPanel; }
    // SVG y grows downward.
    double py(double y) const { return y0 + (hi - y) / (hi - lo) * kPanel; }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void open_svg(std::ofstream& out, const std::string& path, double w, double h) {
    out.open(path);
    if (!out) throw DataError("plot: cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
        << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
}

void close_svg(std::ofstream& out, const std::string& path) {
    out << "</svg>\n";
    out.flush();
    if (!out) throw DataError("plot: write failure on '" + path + "'");
}

void draw_frame(std::ofstream& out, const Mapper& m, const std::string& label) {
    out << "<rect x=\"" << num(m.x0) << "\" y=\"" << num(m.y0) << "\" width=\"" << kPanel
        << "\" height=\"" << kPanel << "\" fill=\"none\" stroke=\"#444\"/>\n";
    if (!label.empty())
        out << "<text x=\"" << num(m.x0 + kPanel / 2) << "\" y=\"" << num(m.y0 - 8)
            << "\" font-size=\"14\" text-anchor=\"middle\" fill=\"#222\">" << label
            << "</text>\n";
}

void draw_points(std::ofstream& out, const Mapper& m, const Eigen::MatrixXd& pts,
                 const std::string& color, double radius, double opacity) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c)
        out << "<circle cx=\"" << num(m.px(pts(0, c))) << "\" cy=\"" << num(m.py(pts(1, c)))
            << "\" r=\"" << radius << "\" fill=\"" << color << "\" fill-opacity=\"" << opacity
            << "\"/>\n";
}

// Compact viridis approximation, t in [0, 1].
void viridis(double t, int& r, int& g, int& b) {
    static const double stops[9][3] = {
        {0.267, 0.005, 0.329}, {0.281, 0.155, 0.469}, {0.244, 0.290, 0.538},
        {0.191, 0.407, 0.556}, {0.148, 0.512, 0.556}, {0.120, 0.617, 0.536},
        {0.208, 0.718, 0.473}, {0.430, 0.808, 0.346}, {0.993, 0.906, 0.144}};
    t = std::min(1.0, std::max(0.0, t));
    const double pos = t * 8.0;
    const int lo = std::min(7, static_cast<int>(pos));
    const double f = pos - lo;
    r = static_cast<int>(255.0 * (stops[lo][0] + f * (stops[lo + 1][0] - stops[lo][0])));
    g = static_cast<int>(255.0 * (stops[lo][1] + f * (stops[lo + 1][1] - stops[lo][1])));
    b = static_cast<int>(255.0 * (stops[lo][2] + f * (stops[lo + 1][2] - stops[lo][2])));
}

void check_points(const Eigen::MatrixXd& pts) {
    if (pts.cols() > 0 && pts.rows() != 2)
        throw std::invalid_argument("plot: points must be 2 x n");
}

}  // namespace

void plot_samples_svg(const std::string& path, const Eigen::MatrixXd& points, double lo,
                      double hi, const std::string& title) {
    check_points(points);
    if (hi <= lo) throw std::invalid_argument("plot: need lo < hi");
    std::ofstream out;
    open_svg(out, path, kPanel + 2 * kMargin, kPanel + 2 * kMargin);
    const Mapper m{lo, hi, kMargin, kMargin};
    draw_frame(out, m, title);
    draw_points(out, m, points, "#1f4e9c", 1.6, 0.65);
    close_svg(out, path);
}

void plot_path_overlay_svg(const std::string& path, const std::vector<Eigen::MatrixXd>& frames,
                           int panels, double lo, double hi, const std::string& title) {
    if (hi <= lo) throw std::invalid_argument("plot: need lo < hi");
    if (panels < 1) throw std::invalid_argument("plot: need at least one panel");
    if (frames.size() < 2) throw std::invalid_argument("plot: need at least two frames");
    const Eigen::Index cols = frames.front().cols();
    for (const auto& f : frames) {
        check_points(f);
        if (f.cols() != cols) throw std::invalid_argument("plot: frame sizes disagree");
    }
    const int F = static_cast<int>(frames.size());
    panels = std::min(panels, F - 1);
    // Cap the drawn trajectories so files stay reviewable.
    const Eigen::Index shown = std::min<Eigen::Index>(cols, 256);

    std::ofstream out;
    open_svg(out, path, panels * (kPanel + kMargin) + kMargin, kPanel + 2 * kMargin);
    for (int p = 0; p < panels; ++p) {
        const int a = p * (F - 1) / panels;
        const int b = (p + 1) * (F - 1) / panels;
        const Mapper m{lo, hi, kMargin + p * (kPanel + kMargin), kMargin};
        draw_frame(out, m, p == 0 ? title : "");
        for (int f = a; f < b; ++f)
            for (Eigen::Index c = 0; c < shown; ++c)
                out << "<line x1=\"" << num(m.px(frames[f](0, c))) << "\" y1=\""
                    << num(m.py(frames[f](1, c))) << "\" x2=\"" << num(m.px(frames[f + 1](0, c)))
                    << "\" y2=\"" << num(m.py(frames[f + 1](1, c)))
                    << "\" stroke=\"#999\" stroke-width=\"0.5\" stroke-opacity=\"0.5\"/>\n";
        draw_points(out, m, frames[a].leftCols(shown), "#1a9c45", 2.0, 0.8);
        draw_points(out, m, frames[b].leftCols(shown), "#c62828", 2.0, 0.8);
    }
    close_svg(out, path);
}

ValueRange plot_value_landscape_svg(const std::string& path, const ScalarField& field, int grid,
                                    double lo, double hi, const Eigen::MatrixXd& overlay,
                                    const std::string& title) {
    if (!field) throw std::invalid_argument("plot: missing scalar field");
    if (grid < 2) throw std::invalid_argument("plot: grid must be >= 2");
    if (hi <= lo) throw std::invalid_argument("plot: need lo < hi");
    check_points(overlay);

    Eigen::MatrixXd values(grid, grid);
    const double h = (hi - lo) / grid;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j)
            values(i, j) = field(lo + (i + 0.5) * h, lo + (j + 0.5) * h);
    if (!values.allFinite()) throw NumericError("plot: scalar field produced non-finite values");
    ValueRange range{values.minCoeff(), values.maxCoeff()};
    const double span = range.span() > 0.0 ? range.span() : 1.0;

    std::ofstream out;
    open_svg(out, path, kPanel + 2 * kMargin, kPanel + 2 * kMargin);
    const Mapper m{lo, hi, kMargin, kMargin};
    const double cell = kPanel / grid;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            int r, g, b;
            viridis((values(i, j) - range.min) / span, r, g, b);
            // +0.5% overlap hides antialiasing seams between cells.
            out << "<rect x=\"" << num(m.x0 + i * cell) << "\" y=\""
                << num(m.y0 + kPanel - (j + 1) * cell) << "\" width=\"" << num(cell * 1.005)
                << "\" height=\"" << num(cell * 1.005) << "\" fill=\"rgb(" << r << "," << g << ","
                << b << ")\"/>\n";
        }
    draw_frame(out, m, title);
    draw_points(out, m, overlay, "#ffffff", 1.4, 0.8);
    close_svg(out, path);
    return range;
}

}  // namespace bdpo
