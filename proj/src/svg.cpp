#include "condinf/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "condinf/errors.hpp"

namespace condinf {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 830.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 460.0;

const char* method_color(const std::string& method) {
    if (method == "mode_marginal") return "#2ca02c";
    if (method == "bc_conditional") return "#1f77b4";
    if (method == "mode_conditional") return "#d62728";
    if (method == "sd_conditional") return "#9467bd";
    return "#7f7f7f";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

struct Scale {
    double x0, x1, y0, y1;
    double x(double v) const {
        return x1 > x0 ? kLeft + (v - x0) / (x1 - x0) * (kRight - kLeft) : 0.5 * (kLeft + kRight);
    }
    double y(double v) const {
        return y1 > y0 ? kBottom - (v - y0) / (y1 - y0) * (kBottom - kTop) : 0.5 * (kTop + kBottom);
    }
};

struct Series {
    std::vector<int> component;
    std::vector<double> value;
    std::vector<double> lo;
    std::vector<double> hi;
};

std::map<std::string, Series> group_by_method(const std::vector<std::string>& method,
                                              const std::vector<int>& component,
                                              const std::vector<double>& value,
                                              const std::vector<double>* lo,
                                              const std::vector<double>* hi) {
    std::map<std::string, Series> groups;
    for (std::size_t i = 0; i < method.size(); ++i) {
        Series& s = groups[method[i]];
        s.component.push_back(component[i]);
        s.value.push_back(value[i]);
        if (lo) {
            s.lo.push_back((*lo)[i]);
        }
        if (hi) {
            s.hi.push_back((*hi)[i]);
        }
    }
    return groups;
}

void emit_axes(std::ostringstream& os, const Scale& sc, const std::string& ylabel) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(kRight)
       << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
       << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fy = sc.y0 + (sc.y1 - sc.y0) * k / 4.0;
        const double py = sc.y(fy);
        os << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(kLeft)
           << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4)
           << "\" text-anchor=\"end\" font-size=\"12\">" << num(fy) << "</text>\n";
        const double fx = sc.x0 + (sc.x1 - sc.x0) * k / 4.0;
        const double px = sc.x(fx);
        os << "<line x1=\"" << num(px) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(px)
           << "\" y2=\"" << num(kBottom + 4) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px) << "\" y=\"" << num(kBottom + 18)
           << "\" text-anchor=\"middle\" font-size=\"12\">" << num(fx) << "</text>\n";
    }
    os << "<text x=\"" << num(0.5 * (kLeft + kRight)) << "\" y=\"" << num(kBottom + 38)
       << "\" text-anchor=\"middle\" font-size=\"13\">component index</text>\n";
    os << "<text x=\"18\" y=\"" << num(0.5 * (kTop + kBottom))
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
       << num(0.5 * (kTop + kBottom)) << ")\">" << ylabel << "</text>\n";
}

void emit_legend(std::ostringstream& os, const std::map<std::string, Series>& groups) {
    double x = kLeft + 8.0;
    for (const auto& [name, series] : groups) {
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(kTop - 28) << "\" width=\"14\" height=\"4\""
           << " fill=\"" << method_color(name) << "\"/>\n";
        os << "<text x=\"" << num(x + 18) << "\" y=\"" << num(kTop - 22)
           << "\" font-size=\"12\">" << name << "</text>\n";
        x += 24.0 + 8.0 * static_cast<double>(name.size());
    }
}

void emit_polyline(std::ostringstream& os, const Scale& sc, const Series& s,
                   const std::string& color) {
    os << "<path d=\"";
    for (std::size_t i = 0; i < s.component.size(); ++i) {
        os << (i == 0 ? "M" : "L") << num(sc.x(s.component[i])) << " " << num(sc.y(s.value[i]));
    }
    os << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"/>\n";
}

void emit_band(std::ostringstream& os, const Scale& sc, const Series& s, const std::string& color) {
    if (s.lo.empty() || s.hi.empty()) {
        return;
    }
    os << "<path d=\"";
    for (std::size_t i = 0; i < s.component.size(); ++i) {
        os << (i == 0 ? "M" : "L") << num(sc.x(s.component[i])) << " " << num(sc.y(s.hi[i]));
    }
    for (std::size_t i = s.component.size(); i-- > 0;) {
        os << "L" << num(sc.x(s.component[i])) << " " << num(sc.y(s.lo[i]));
    }
    os << "Z\" fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
}

void write_svg_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body << "</svg>\n";
}

} // namespace

void write_coverage_svg(const std::string& path, const CoverageTable& table) {
    if (table.method.empty()) {
        throw ContractViolation("write_coverage_svg: empty table");
    }
    const auto groups = group_by_method(table.method, table.component, table.coverage,
                                        &table.q05, &table.q95);
    Scale sc;
    sc.x0 = *std::min_element(table.component.begin(), table.component.end());
    sc.x1 = *std::max_element(table.component.begin(), table.component.end());
    double ymin = 0.95;
    double ymax = 0.95;
    for (std::size_t i = 0; i < table.coverage.size(); ++i) {
        ymin = std::min({ymin, table.coverage[i], table.q05[i]});
        ymax = std::max({ymax, table.coverage[i], table.q95[i]});
    }
    sc.y0 = std::max(0.0, ymin - 0.02);
    sc.y1 = std::min(1.0, ymax + 0.02);

    std::ostringstream os;
    emit_axes(os, sc, "coverage");
    for (const auto& [name, series] : groups) {
        emit_band(os, sc, series, method_color(name));
    }
    // 0.95 nominal reference
    os << "<line x1=\"" << num(sc.x(sc.x0)) << "\" y1=\"" << num(sc.y(0.95)) << "\" x2=\""
       << num(sc.x(sc.x1)) << "\" y2=\"" << num(sc.y(0.95))
       << "\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << num(kRight + 4) << "\" y=\"" << num(sc.y(0.95) + 4)
       << "\" font-size=\"11\">0.95</text>\n";
    for (const auto& [name, series] : groups) {
        emit_polyline(os, sc, series, method_color(name));
    }
    emit_legend(os, groups);
    write_svg_file(path, os.str());
}

void write_bias_svg(const std::string& path, const BiasTable& table) {
    if (table.method.empty()) {
        throw ContractViolation("write_bias_svg: empty table");
    }
    const auto groups =
        group_by_method(table.method, table.component, table.squared_bias, nullptr, nullptr);
    Scale sc;
    sc.x0 = *std::min_element(table.component.begin(), table.component.end());
    sc.x1 = *std::max_element(table.component.begin(), table.component.end());
    sc.y0 = 0.0;
    sc.y1 = *std::max_element(table.squared_bias.begin(), table.squared_bias.end());
    if (!(sc.y1 > 0.0)) {
        sc.y1 = 1.0;
    }
    sc.y1 *= 1.05;

    std::ostringstream os;
    emit_axes(os, sc, "squared bias");
    os << "<line x1=\"" << num(sc.x(sc.x0)) << "\" y1=\"" << num(sc.y(0.0)) << "\" x2=\""
       << num(sc.x(sc.x1)) << "\" y2=\"" << num(sc.y(0.0))
       << "\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    for (const auto& [name, series] : groups) {
        emit_polyline(os, sc, series, method_color(name));
    }
    emit_legend(os, groups);
    write_svg_file(path, os.str());
}

} // namespace condinf
