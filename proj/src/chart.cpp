#include "tvws/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tvws {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 24.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 56.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string gain_chart_svg(const std::vector<GainStats>& runs) {
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
           "Channels gained per device vs transmit power</text>\n";

    std::vector<double> powers;
    double y_max = 0.0;
    for (const GainStats& run : runs) {
        for (const PowerGain& g : run.per_power) {
            powers.push_back(g.power_mw);
            y_max = std::max(y_max, g.avg_gained_over_gaining);
        }
        for (const auto& [mw, target] : reference_targets(run.city)) {
            powers.push_back(mw);
            y_max = std::max(y_max, target.avg);
        }
    }
    if (powers.empty()) {
        svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">no data</text>\n";
        svg << "</svg>\n";
        return svg.str();
    }
    std::sort(powers.begin(), powers.end());
    powers.erase(std::unique(powers.begin(), powers.end()), powers.end());

    const double x_lo = std::log10(powers.front());
    const double x_hi = std::log10(powers.back());
    const double x_span = std::max(x_hi - x_lo, 1e-9);
    y_max = std::max(1.0, std::ceil(y_max * 1.08));
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    const auto x_of = [&](double mw) {
        return kLeft + (std::log10(mw) - x_lo) / x_span * plot_w;
    };
    const auto y_of = [&](double channels) { return kTop + (1.0 - channels / y_max) * plot_h; };

    // Axes and gridlines.
    svg << "<g stroke=\"#444\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\"/>\n";
    svg << "</g>\n";

    for (double mw : powers) {
        const double x = x_of(mw);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(x) << "\" y2=\""
            << kTop + plot_h << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt(mw, "%g") << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
           "EIRP (mW, log scale)</text>\n";

    const int y_ticks = 5;
    for (int i = 0; i <= y_ticks; ++i) {
        const double v = y_max * i / y_ticks;
        const double y = y_of(v);
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(y) << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#eee\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << fmt(v, "%.1f")
            << "</text>\n";
    }
    svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << kTop + plot_h / 2 << ")\">channels gained (mean over gaining devices)</text>\n";

    // Series.
    double legend_y = kTop + 6.0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        const GainStats& run = runs[s];
        const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];

        std::string pts;
        for (const PowerGain& g : run.per_power) {
            if (!pts.empty()) pts += ' ';
            pts += fmt(x_of(g.power_mw)) + "," + fmt(y_of(g.avg_gained_over_gaining));
        }
        if (!pts.empty())
            svg << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
        for (const PowerGain& g : run.per_power)
            svg << "<circle cx=\"" << fmt(x_of(g.power_mw)) << "\" cy=\""
                << fmt(y_of(g.avg_gained_over_gaining)) << "\" r=\"3.2\" fill=\"" << color
                << "\"/>\n";

        const auto& targets = reference_targets(run.city);
        if (!targets.empty()) {
            std::string tpts;
            for (const auto& [mw, target] : targets) {
                if (!tpts.empty()) tpts += ' ';
                tpts += fmt(x_of(mw)) + "," + fmt(y_of(target.avg));
            }
            svg << "<polyline points=\"" << tpts << "\" fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\" opacity=\"0.7\"/>\n";
        }

        svg << "<line x1=\"" << kLeft + plot_w - 170 << "\" y1=\"" << fmt(legend_y) << "\" x2=\""
            << kLeft + plot_w - 146 << "\" y2=\"" << fmt(legend_y) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + plot_w - 140 << "\" y=\"" << fmt(legend_y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(run.city)
            << (targets.empty() ? "" : " (dashed: reference)") << "</text>\n";
        legend_y += 18.0;
    }

    svg << "</svg>\n";
    return svg.str();
}

} // namespace tvws
