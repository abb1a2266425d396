#ifndef UAVBEAM_SVGPLOT_HPP
#define UAVBEAM_SVGPLOT_HPP

#include <string>

namespace uavbeam {

/// Render a rate or trajectory CSV (the schemas emitted by this project) as a
/// standalone SVG line chart: one polyline per scheme, axes, legend. The
/// trajectory chart uses equal-aspect axes. Throws ConfigError (with the line
/// number) on a malformed or unrecognized CSV.
void render_plot(const std::string& csv_path, const std::string& out_path);

}  // namespace uavbeam

#endif
