#include "neyman/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace neyman {

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
    double h = (static_cast<double>(v.size()) - 1) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"};

}  // namespace

Quantiles quantiles(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    return {v.front(), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75), v.back()};
}

std::string boxplot_svg(const std::string& title, const std::vector<BoxPanel>& panels) {
    const double pw = 360, ph = 300, ml = 60, mt = 50, mb = 70, gap = 30;
    const double width = ml + panels.size() * (pw + gap);
    const double height = mt + ph + mb;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        double x0 = ml + p * (pw + gap), y0 = mt;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& s : panel.series)
            for (double v : s.values)
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        if (panel.zero_line) {
            lo = std::min(lo, 0.0);
            hi = std::max(hi, 0.0);
        }
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        auto y = [&](double v) { return y0 + ph - (v - lo) / (hi - lo) * ph; };
        os << "<text x=\"" << num(x0 + pw / 2) << "\" y=\"" << num(y0 - 10) << "\" text-anchor=\"middle\" font-size=\"12\">"
           << escape(panel.title) << "</text>\n";
        os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
           << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            double v = lo + (hi - lo) * t / 4.0;
            os << "<line x1=\"" << num(x0 - 4) << "\" x2=\"" << num(x0) << "\" y1=\"" << num(y(v)) << "\" y2=\"" << num(y(v))
               << "\" stroke=\"#333\"/>\n";
            os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << tick(v) << "</text>\n";
        }
        if (panel.zero_line)
            os << "<line x1=\"" << num(x0) << "\" x2=\"" << num(x0 + pw) << "\" y1=\"" << num(y(0)) << "\" y2=\"" << num(y(0))
               << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
        const double slot = pw / std::max<std::size_t>(1, panel.series.size());
        for (std::size_t s = 0; s < panel.series.size(); ++s) {
            const auto& series = panel.series[s];
            double cx = x0 + slot * (s + 0.5), bw = slot * 0.5;
            const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
            os << "<text x=\"" << num(cx) << "\" y=\"" << num(y0 + ph + 16) << "\" text-anchor=\"middle\">" << escape(series.label)
               << "</text>\n";
            std::vector<double> finite;
            for (double v : series.values)
                if (std::isfinite(v)) finite.push_back(v);
            if (finite.empty()) continue;
            auto q = quantiles(finite);
            os << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << num(y(q.min)) << "\" y2=\"" << num(y(q.max))
               << "\" stroke=\"#333\"/>\n";
            os << "<rect x=\"" << num(cx - bw / 2) << "\" y=\"" << num(y(q.q75)) << "\" width=\"" << num(bw) << "\" height=\""
               << num(std::max(0.5, y(q.q25) - y(q.q75))) << "\" fill=\"" << color << "\" fill-opacity=\"0.6\" stroke=\"#333\"/>\n";
            os << "<line x1=\"" << num(cx - bw / 2) << "\" x2=\"" << num(cx + bw / 2) << "\" y1=\"" << num(y(q.median))
               << "\" y2=\"" << num(y(q.median)) << "\" stroke=\"#000\" stroke-width=\"2\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace neyman
