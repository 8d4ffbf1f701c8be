#pragma once

// Minimal standalone SVG line plots for report output: estimate curves vs
// oracle curves, CDF overlays. No external plotting dependency.

#include <string>
#include <vector>

namespace germgrain {

struct PlotSeries {
    std::string name;
    std::string color = "#1f77b4";
    bool dashed = false;
    std::vector<std::pair<double, double>> points;
};

// Writes a self-contained SVG with auto-scaled axes, tick labels, and a
// legend. Throws std::runtime_error on I/O failure.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

}  // namespace germgrain
