#include "sturmian/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace sturmian::io {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("parse_double: not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::size_t CsvTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw std::invalid_argument("csv: missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) return table;
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw std::invalid_argument("csv: row has " + std::to_string(cells.size()) +
                                        " cells, header has " +
                                        std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

// Fixed 3-decimal output keeps the bytes stable across platforms.
std::string fixed(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::fixed, 3);
    if (ec != std::errc{}) return "0";
    return std::string(buf.data(), ptr);
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

void write_svg(std::ostream& out, const ScatterPlot& plot) {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    if (!plot.points.empty()) {
        xmin = ymin = INFINITY;
        xmax = ymax = -INFINITY;
        for (const auto& p : plot.points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        if (xmax - xmin <= 0.0) { xmin -= 0.5; xmax += 0.5; }
        if (ymax - ymin <= 0.0) { ymin -= 0.5; ymax += 0.5; }
    }
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kWidth)
        << "\" height=\"" << fixed(kHeight) << "\" viewBox=\"0 0 " << fixed(kWidth) << ' '
        << fixed(kHeight) << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << fixed(kWidth) << "\" height=\"" << fixed(kHeight)
        << "\" fill=\"#ffffff\"/>\n";
    out << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(pw)
        << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"20.000\" text-anchor=\"middle\">"
        << escape(plot.title) << "</text>\n";
    out << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 10)
        << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
    out << "<text x=\"15.000\" y=\"" << fixed(kTop + ph / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 15.000 " << fixed(kTop + ph / 2)
        << ")\">" << escape(plot.y_label) << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << fixed(sx(fx)) << "\" y=\"" << fixed(kTop + ph + 15)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << fixed(fx) << "</text>\n";
        out << "<text x=\"" << fixed(kLeft - 5) << "\" y=\"" << fixed(sy(fy))
            << "\" font-size=\"10\" text-anchor=\"end\">" << fixed(fy) << "</text>\n";
    }
    for (const auto& p : plot.points) {
        out << "<circle cx=\"" << fixed(sx(p.x)) << "\" cy=\"" << fixed(sy(p.y))
            << "\" r=\"1.000\" fill=\"" << p.color << "\"/>\n";
    }
    double ly = kTop + 12;
    for (const auto& s : plot.legend) {
        out << "<circle cx=\"" << fixed(kLeft + pw - 90) << "\" cy=\"" << fixed(ly - 4)
            << "\" r=\"3.000\" fill=\"" << s.color << "\"/>\n";
        out << "<text x=\"" << fixed(kLeft + pw - 82) << "\" y=\"" << fixed(ly)
            << "\" font-size=\"10\">" << escape(s.label) << "</text>\n";
        ly += 14;
    }
    out << "</svg>\n";
}

}  // namespace sturmian::io
