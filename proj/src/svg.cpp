#include "germgrain/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "germgrain/core.hpp"

namespace germgrain {

namespace {

constexpr double kW = 640.0, kH = 420.0;
constexpr double kL = 70.0, kR = 20.0, kT = 40.0, kB = 50.0;

// Round tick step to 1/2/5 x 10^k near range/6.
double tick_step(double range) {
    if (range <= 0.0) return 1.0;
    double raw = range / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double frac = raw / mag;
    double nice = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
    return nice * mag;
}

std::string trim_number(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    for (const PlotSeries& s : series)
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 <= x1)) {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    double pad_y = 0.05 * (y1 - y0);
    y0 -= pad_y;
    y1 += pad_y;

    auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";

    double sx = tick_step(x1 - x0), sy = tick_step(y1 - y0);
    for (double tx = std::ceil(x0 / sx) * sx; tx <= x1 + 1e-12 * sx; tx += sx) {
        svg << "<line x1=\"" << px(tx) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(tx)
            << "\" y2=\"" << py(y1) << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << px(tx) << "\" y=\"" << kH - kB + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
            << trim_number(tx) << "</text>\n";
    }
    for (double ty = std::ceil(y0 / sy) * sy; ty <= y1 + 1e-12 * sy; ty += sy) {
        svg << "<line x1=\"" << px(x0) << "\" y1=\"" << py(ty) << "\" x2=\"" << px(x1)
            << "\" y2=\"" << py(ty) << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << kL - 8 << "\" y=\"" << py(ty) + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
            << trim_number(ty) << "</text>\n";
    }
    svg << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR
        << "\" height=\"" << kH - kT - kB << "\" fill=\"none\" stroke=\"#404040\"/>\n";
    svg << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
        << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 16 " << (kT + kH - kB) / 2 << ")\">" << y_label
        << "</text>\n";

    double ly = kT + 14.0;
    for (const PlotSeries& s : series) {
        if (s.points.empty()) continue;
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (const auto& [x, y] : s.points) svg << px(x) << "," << py(y) << " ";
        svg << "\"/>\n";
        svg << "<line x1=\"" << kW - kR - 150 << "\" y1=\"" << ly << "\" x2=\"" << kW - kR - 120
            << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        svg << "<text x=\"" << kW - kR - 114 << "\" y=\"" << ly + 4
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.name << "</text>\n";
        ly += 16.0;
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_svg_plot: cannot open " + path);
    out << svg.str();
}

}  // namespace germgrain
