#include "uavbeam/svgplot.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {

constexpr const char* kTrajHeader =
    "k,x_true,y_true,x_pred_lrnet,y_pred_lrnet,err_lrnet_m,"
    "x_pred_kalman,y_pred_kalman,err_kalman_m";
constexpr const char* kRateHeader = "k,range_m,rate_genie,rate_lrnet,rate_kalman";

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;
};

std::vector<double> parse_row(const std::string& line, std::size_t n_cols, int line_no) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        const std::string field =
            line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        const double v = std::strtod(field.c_str(), &end);
        if (field.empty() || end != field.c_str() + field.size()) {
            throw ConfigError("csv parse error at line " + std::to_string(line_no) +
                              ": bad number '" + field + "'");
        }
        vals.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (vals.size() != n_cols) {
        throw ConfigError("csv parse error at line " + std::to_string(line_no) + ": expected " +
                          std::to_string(n_cols) + " columns, got " +
                          std::to_string(vals.size()));
    }
    return vals;
}

struct Chart {
    std::vector<Series> series;
    std::string x_label, y_label;
    bool equal_aspect = false;
};

Chart load_chart(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) {
        throw ConfigError("cannot open csv: " + csv_path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("csv parse error at line 1: empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }

    Chart chart;
    std::size_t n_cols = 0;
    bool trajectory = false;
    if (line == kTrajHeader) {
        trajectory = true;
        n_cols = 9;
        chart.equal_aspect = true;
        chart.x_label = "x [m]";
        chart.y_label = "y [m]";
        chart.series = {{"actual", "#222222", {}, {}},
                        {"lrnet", "#cc3322", {}, {}},
                        {"kalman", "#2277aa", {}, {}}};
    } else if (line == kRateHeader) {
        n_cols = 5;
        chart.x_label = "slot k";
        chart.y_label = "rate [bits/s/Hz]";
        chart.series = {{"genie", "#222222", {}, {}},
                        {"lrnet", "#cc3322", {}, {}},
                        {"kalman", "#2277aa", {}, {}}};
    } else {
        throw ConfigError("unrecognized csv header: " + line);
    }

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto vals = parse_row(line, n_cols, line_no);
        if (trajectory) {
            chart.series[0].x.push_back(vals[1]);
            chart.series[0].y.push_back(vals[2]);
            chart.series[1].x.push_back(vals[3]);
            chart.series[1].y.push_back(vals[4]);
            chart.series[2].x.push_back(vals[6]);
            chart.series[2].y.push_back(vals[7]);
        } else {
            for (int s = 0; s < 3; ++s) {
                chart.series[s].x.push_back(vals[0]);
                chart.series[s].y.push_back(vals[2 + s]);
            }
        }
    }
    if (chart.series[0].x.empty()) {
        throw ConfigError("csv parse error: no data rows in " + csv_path);
    }
    return chart;
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step = 10.0;
    if (frac <= 1.0) step = 1.0;
    else if (frac <= 2.0) step = 2.0;
    else if (frac <= 5.0) step = 5.0;
    return step * mag;
}

std::string num(double v) {
    if (v == 0.0) {
        return "0";  // avoid "-0" tick labels
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void render_plot(const std::string& csv_path, const std::string& out_path) {
    const Chart chart = load_chart(csv_path);

    const double width = 880, height = 560;
    const double ml = 72, mr = 26, mt = 28, mb = 56;
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;

    double xmin = chart.series[0].x[0], xmax = xmin;
    double ymin = chart.series[0].y[0], ymax = ymin;
    for (const auto& s : chart.series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    auto widen = [](double& lo, double& hi) {
        const double span = hi - lo;
        if (span <= 0.0) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            lo -= 0.04 * span;
            hi += 0.04 * span;
        }
    };
    widen(xmin, xmax);
    widen(ymin, ymax);

    double sx = pw / (xmax - xmin);
    double sy = ph / (ymax - ymin);
    if (chart.equal_aspect) {
        const double s = std::min(sx, sy);
        const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
        xmin = cx - 0.5 * pw / s;
        xmax = cx + 0.5 * pw / s;
        ymin = cy - 0.5 * ph / s;
        ymax = cy + 0.5 * ph / s;
        sx = sy = s;
    }
    auto px = [&](double x) { return ml + (x - xmin) * sx; };
    auto py = [&](double y) { return mt + ph - (y - ymin) * sy; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // grid + ticks
    svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    const double xstep = nice_step(xmax - xmin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
        const double gx = px(t);
        svg << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx << "\" y2=\""
            << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << gx << "\" y=\"" << mt + ph + 18
            << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    }
    const double ystep = nice_step(ymax - ymin);
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
        const double gy = py(t);
        svg << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << ml + pw << "\" y2=\""
            << gy << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
            << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
        << "\" text-anchor=\"middle\">" << chart.x_label << "</text>\n";
    svg << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">" << chart.y_label << "</text>\n";
    svg << "</g>\n";

    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#555\"/>\n";

    for (const auto& s : chart.series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        char buf[48];
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            svg << buf;
        }
        svg << "\"/>\n";
    }

    // legend, top-right corner of the plot area
    const double lx = ml + pw - 130, ly = mt + 12;
    svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    svg << "<rect x=\"" << lx - 8 << "\" y=\"" << ly - 10 << "\" width=\"130\" height=\""
        << chart.series.size() * 18 + 8 << "\" fill=\"white\" stroke=\"#aaa\"/>\n";
    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const double ey = ly + 18 * static_cast<double>(i) + 3;
        svg << "<line x1=\"" << lx << "\" y1=\"" << ey << "\" x2=\"" << lx + 24 << "\" y2=\""
            << ey << "\" stroke=\"" << chart.series[i].color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << lx + 30 << "\" y=\"" << ey + 4 << "\">" << chart.series[i].label
            << "</text>\n";
    }
    svg << "</g>\n</svg>\n";

    std::ofstream out(out_path);
    if (!out) {
        throw ConfigError("cannot open svg for writing: " + out_path);
    }
    out << svg.str();
    if (!out) {
        throw ConfigError("failed writing svg: " + out_path);
    }
}

}  // namespace uavbeam
