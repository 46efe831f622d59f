#pragma once

#include <string>
#include <vector>

namespace neyman {

struct BoxSeries {
    std::string label;
    std::vector<double> values;
};

struct BoxPanel {
    std::string title;
    std::vector<BoxSeries> series;
    bool zero_line = false;
};

// Standalone SVG with one boxplot panel per entry, laid out in a row.
std::string boxplot_svg(const std::string& title, const std::vector<BoxPanel>& panels);

struct Quantiles {
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};
Quantiles quantiles(std::vector<double> v);

}  // namespace neyman
