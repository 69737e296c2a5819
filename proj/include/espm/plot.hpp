#pragma once

#include <string>
#include <vector>

namespace espm {

struct PlotSeries {
    std::vector<double> x, y;
    std::string label;
    std::string color = "#1f77b4";
};

// Minimal SVG line plot (derived artifact only, never an input format).
void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const std::string& title, const std::string& xlabel,
                    const std::string& ylabel);

}  // namespace espm
