#include "qsmpc/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qsmpc/emulator.hpp"

namespace qsmpc {

namespace {

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    // Avoid "-0.00".
    if (std::string(buf) == "-0.00")
        return "0.00";
    return buf;
}

struct Series {
    std::vector<std::pair<double, double>> reference;
    std::vector<std::pair<double, double>> quantized;
};

} // namespace

std::string render_phase_portrait(const PlotSpec& spec) {
    if (spec.trajectory_files.empty())
        throw Error("plot: no trajectory files given");

    std::vector<Series> all;
    for (const auto& path : spec.trajectory_files) {
        const TrajectoryTable t = read_trajectory_csv(path);
        if (t.n < 2)
            throw Error(path + ": phase portraits need at least two state coordinates");
        if (t.k.size() < 2)
            throw Error(path + ": need at least two trajectory rows");
        Series s;
        for (std::size_t i = 0; i < t.k.size(); ++i) {
            s.reference.emplace_back(t.x_ref[i][0], t.x_ref[i][1]);
            s.quantized.emplace_back(t.x_q[i][0], t.x_q[i][1]);
        }
        all.push_back(std::move(s));
    }

    PlotBounds b;
    if (spec.bounds) {
        b = *spec.bounds;
    } else {
        b = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& s : all)
            for (const auto* pts : {&s.reference, &s.quantized})
                for (const auto& [x, y] : *pts) {
                    b.x_min = std::min(b.x_min, x);
                    b.x_max = std::max(b.x_max, x);
                    b.y_min = std::min(b.y_min, y);
                    b.y_max = std::max(b.y_max, y);
                }
        const double mx = std::max(0.05 * (b.x_max - b.x_min), 1e-3);
        const double my = std::max(0.05 * (b.y_max - b.y_min), 1e-3);
        b.x_min -= mx;
        b.x_max += mx;
        b.y_min -= my;
        b.y_max += my;
    }
    if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min))
        throw Error("plot: degenerate axis bounds");

    const double margin = 40.0;
    const double pw = spec.width - 2 * margin;
    const double ph = spec.height - 2 * margin;
    auto sx = [&](double x) { return margin + (x - b.x_min) / (b.x_max - b.x_min) * pw; };
    auto sy = [&](double y) { return margin + (b.y_max - y) / (b.y_max - b.y_min) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << fixed(margin) << "\" y=\"" << fixed(margin) << "\" width=\"" << fixed(pw)
        << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (b.x_min < 0 && b.x_max > 0)
        svg << "<line class=\"axis\" x1=\"" << fixed(sx(0)) << "\" y1=\"" << fixed(margin) << "\" x2=\""
            << fixed(sx(0)) << "\" y2=\"" << fixed(margin + ph) << "\" stroke=\"#cccccc\"/>\n";
    if (b.y_min < 0 && b.y_max > 0)
        svg << "<line class=\"axis\" x1=\"" << fixed(margin) << "\" y1=\"" << fixed(sy(0)) << "\" x2=\""
            << fixed(margin + pw) << "\" y2=\"" << fixed(sy(0)) << "\" stroke=\"#cccccc\"/>\n";
    svg << "<text x=\"" << fixed(margin) << "\" y=\"" << fixed(margin + ph + 16) << "\" font-size=\"11\">"
        << format_real(b.x_min) << "</text>\n";
    svg << "<text x=\"" << fixed(margin + pw) << "\" y=\"" << fixed(margin + ph + 16)
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_real(b.x_max) << "</text>\n";
    svg << "<text x=\"" << fixed(margin - 4) << "\" y=\"" << fixed(margin + ph)
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_real(b.y_min) << "</text>\n";
    svg << "<text x=\"" << fixed(margin - 4) << "\" y=\"" << fixed(margin + 10)
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_real(b.y_max) << "</text>\n";

    auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* cls,
                        const std::string& color, bool dashed) {
        svg << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (dashed)
            svg << " stroke-dasharray=\"5,3\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i)
                svg << ' ';
            svg << fixed(sx(pts[i].first)) << ',' << fixed(sy(pts[i].second));
        }
        svg << "\"/>\n";
    };
    for (const auto& s : all) {
        polyline(s.reference, "reference", spec.reference_color, true);
        polyline(s.quantized, "quantized", spec.quantized_color, false);
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_phase_portrait(const PlotSpec& spec) {
    const std::string svg = render_phase_portrait(spec);
    std::ofstream out(spec.output_path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + spec.output_path);
    out << svg;
}

} // namespace qsmpc
