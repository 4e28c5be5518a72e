#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qsmpc {

struct PlotBounds {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;
};

struct PlotSpec {
    std::vector<std::string> trajectory_files;
    std::string output_path;
    // Fitted to the data (with a 5% margin) when absent.
    std::optional<PlotBounds> bounds;
    std::string reference_color = "#7f7f7f";
    std::string quantized_color = "#d62728";
    int width = 640;
    int height = 640;
};

// Phase-plane SVG of the first two state coordinates: one reference polyline
// (dashed) and one quantized polyline per trajectory file. Output bytes depend
// only on the inputs.
[[nodiscard]] std::string render_phase_portrait(const PlotSpec& spec);

// Renders and writes spec.output_path.
void write_phase_portrait(const PlotSpec& spec);

} // namespace qsmpc
