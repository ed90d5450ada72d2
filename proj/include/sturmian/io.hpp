// io.hpp: number formatting, tiny CSV reader, deterministic SVG scatter plots.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sturmian::io {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, throws if absent.
    std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

struct ScatterPoint {
    double x{0.0};
    double y{0.0};
    std::string color{"#000000"};
};

struct ScatterSeries {
    std::string label;
    std::string color;
};

struct ScatterPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ScatterPoint> points;
    std::vector<ScatterSeries> legend;
};

/// Plain scatter, no connecting lines. Output depends only on the input.
void write_svg(std::ostream& out, const ScatterPlot& plot);

}  // namespace sturmian::io
