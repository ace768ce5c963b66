#include <algorithm>
#include <cstdio>
#include <string>

#include "forge/exp/exp.hpp"

namespace forge::exp {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string polyline(const std::vector<attack::TrajectoryPoint>& pts, bool use_asr,
                     double x0, double x1, double plot_x, double plot_y,
                     double plot_w, double plot_h, const char* color) {
    std::string out = "  <polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) {
        const double fx = x1 > x0 ? (p.strength - x0) / (x1 - x0) : 0.5;
        const double v = use_asr ? p.asr : p.benign_accuracy;
        const double px = plot_x + fx * plot_w;
        const double py = plot_y + (1.0 - v) * plot_h;  // y in [0,1]
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px, py);
        out += buf;
    }
    out += "\"/>\n";
    return out;
}

}  // namespace

std::string svg_trajectory_plot(const std::string& title, const std::string& x_label,
                                const std::vector<attack::TrajectoryPoint>& points) {
    const double width = 520, height = 340;
    const double plot_x = 60, plot_y = 40, plot_w = 420, plot_h = 240;
    double x0 = 0, x1 = 1;
    if (!points.empty()) {
        x0 = points.front().strength;
        x1 = points.back().strength;
        if (x1 == x0) x1 = x0 + 1;
    }

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
           "\" height=\"" + fmt(height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + fmt(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";

    // frame and gridlines at 0, 0.25, .., 1.0
    for (int i = 0; i <= 4; ++i) {
        const double v = 0.25 * i;
        const double y = plot_y + (1.0 - v) * plot_h;
        svg += "  <line x1=\"" + fmt(plot_x) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               fmt(plot_x + plot_w) + "\" y2=\"" + fmt(y) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "  <text x=\"" + fmt(plot_x - 8) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt(v) + "</text>\n";
    }
    svg += "  <rect x=\"" + fmt(plot_x) + "\" y=\"" + fmt(plot_y) + "\" width=\"" +
           fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    // x tick labels at the data points (thinned to at most 10)
    if (!points.empty()) {
        const size_t step = std::max<size_t>(1, points.size() / 10);
        for (size_t i = 0; i < points.size(); i += step) {
            const double fx = (points[i].strength - x0) / (x1 - x0);
            const double px = plot_x + fx * plot_w;
            svg += "  <text x=\"" + fmt(px) + "\" y=\"" + fmt(plot_y + plot_h + 16) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                   "font-size=\"11\">" + fmt(points[i].strength) + "</text>\n";
        }
    }
    svg += "  <text x=\"" + fmt(plot_x + plot_w / 2) + "\" y=\"" +
           fmt(plot_y + plot_h + 36) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           x_label + "</text>\n";

    svg += polyline(points, true, x0, x1, plot_x, plot_y, plot_w, plot_h, "#c0392b");
    svg += polyline(points, false, x0, x1, plot_x, plot_y, plot_w, plot_h, "#2980b9");

    // legend
    svg += "  <line x1=\"" + fmt(plot_x + 8) + "\" y1=\"" + fmt(plot_y + 12) +
           "\" x2=\"" + fmt(plot_x + 36) + "\" y2=\"" + fmt(plot_y + 12) +
           "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    svg += "  <text x=\"" + fmt(plot_x + 42) + "\" y=\"" + fmt(plot_y + 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\">authentication success "
           "rate</text>\n";
    svg += "  <line x1=\"" + fmt(plot_x + 218) + "\" y1=\"" + fmt(plot_y + 12) +
           "\" x2=\"" + fmt(plot_x + 246) + "\" y2=\"" + fmt(plot_y + 12) +
           "\" stroke=\"#2980b9\" stroke-width=\"2\"/>\n";
    svg += "  <text x=\"" + fmt(plot_x + 252) + "\" y=\"" + fmt(plot_y + 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\">benign accuracy</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace forge::exp
